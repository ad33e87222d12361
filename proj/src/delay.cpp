#include "sensedelay/delay.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double queueing_delay_from_moments(double lambda, const ServiceMoments& m) {
  const double load = lambda * m.d1;
  if (!(load < 1.0)) return kInf;
  return (lambda * m.d2 - load) / (2.0 * (1.0 - load)) + m.d1;
}

DelayResult mean_queueing_delay(const Scenario& s, FixedPointForm form) {
  DelayResult r;
  r.steady = solve_steady_state(s, form);
  const double sigma = derive_slot(s.scheme).slot_ms;
  if (r.steady.regime == Regime::Unsaturated) {
    r.moments = service_moments_closed_form(s, r.steady);
    r.t_slots = queueing_delay_from_moments(r.steady.lambda, r.moments);
    r.finite = std::isfinite(r.t_slots);
  }
  if (!r.finite) {
    r.t_slots = kInf;
    r.t_ms = kInf;
    return r;
  }
  r.t_ms = sigma * r.t_slots;
  return r;
}

OptimalQ0 optimal_q0(const Scenario& s, const SolverOptions& opt) {
  const Family fam = s.scheme.family;
  const HoldingTimes h = holding_times(s.scheme);
  const double lambda_hat = s.aggregate_packet_rate();
  const double lmax = max_throughput(fam, h);
  OptimalQ0 out;
  out.region = unsaturated_region(fam, h, s.n, lambda_hat, s.backoff, opt.form);
  if (out.region.empty) {
    std::ostringstream os;
    os << "aggregate rate " << lambda_hat << " leaves no unsaturated q0 (maximum throughput "
       << lmax << ")";
    throw SaturatedError(ErrorCode::Saturated, os.str(), lmax);
  }
  const UnsaturatedRegion& reg = out.region;
  const double eps = opt.epsilon;

  double q = std::min(reg.q0_upper_raw - eps, 1.0);
  if (q <= reg.q0_lower) {
    q = 0.5 * (reg.q0_lower + reg.q0_upper);
    out.midpoint_fallback = true;
    out.warnings.emplace_back("region narrower than epsilon; using its midpoint");
  }
  out.q0_star = q;
  out.delay = mean_queueing_delay(s.with_q0(q), opt.form);

  double q_relaxed = std::min(reg.q0_upper_raw - 10.0 * eps, 1.0);
  if (q_relaxed <= reg.q0_lower) q_relaxed = q;
  out.q0_relaxed = q_relaxed;
  out.delay_relaxed = mean_queueing_delay(s.with_q0(q_relaxed), opt.form);

  if (opt.verify_monotone && opt.monotone_grid > 1) {
    const int m = opt.monotone_grid;
    double prev = kInf;
    for (int i = 1; i <= m; ++i) {
      const double qi = reg.q0_lower + (q - reg.q0_lower) * i / m;
      const double t = i == m ? out.delay.t_slots
                              : mean_queueing_delay(s.with_q0(qi), opt.form).t_slots;
      if (t > prev * (1.0 + 1e-9)) {
        out.monotone = false;
        std::ostringstream os;
        os << "mean delay increases with q0 near q0 = " << qi;
        out.warnings.push_back(os.str());
        break;
      }
      prev = t;
    }
  }
  return out;
}

}  // namespace sensedelay
