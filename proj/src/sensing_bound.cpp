#include "sensedelay/sensing_bound.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double throughput_optimal_bound(Connection connection, double L, double ds, double df) {
  constexpr double e = std::numbers::e;
  if (connection == Connection::Based) return (std::exp(1.0 / e) - 1.0) * df;
  const double a = e * L + df + (e - 1.0) * ds;
  return std::exp((1.0 - e) * (L + ds) / a) * a - L - df;
}

double throughput_optimal_bound(const AccessScheme& s) {
  return throughput_optimal_bound(s.connection, s.payload_ms, s.overhead_success_ms,
                                  s.overhead_fail_ms);
}

AccessScheme aloha_counterpart(const AccessScheme& base) {
  AccessScheme a = base;
  a.family = Family::Aloha;
  a.slot_ms = 0.0;
  return derive_slot(a);
}

AccessScheme csma_counterpart(const AccessScheme& base, double sigma_ms) {
  AccessScheme c = base;
  c.family = Family::Csma;
  c.slot_ms = sigma_ms;
  return derive_slot(c);
}

double min_delay_ms(const Scenario& s, double lambda_tilde, const SolverOptions& opt) {
  try {
    return optimal_q0(s.with_aggregate_bit_rate(lambda_tilde), opt).delay.t_ms;
  } catch (const SaturatedError&) {
    return kInf;
  }
}

SensingBoundResult delay_optimal_bound(const Scenario& base, double lambda_tilde,
                                       const SensingSearchConfig& cfg) {
  SensingBoundResult r;
  r.lambda_tilde = lambda_tilde;
  r.sigma_star_throughput_ms = throughput_optimal_bound(base.scheme);

  Scenario al = base;
  al.scheme = aloha_counterpart(base.scheme);
  r.t_min_aloha_ms = min_delay_ms(al, lambda_tilde, cfg.solver);
  if (!std::isfinite(r.t_min_aloha_ms)) {
    std::ostringstream os;
    os << "Aloha is saturated at aggregate bit rate " << lambda_tilde
       << "; the delay-optimal sensing bound is undefined";
    throw SaturatedError(ErrorCode::AlohaSaturated, os.str(), max_throughput(al.scheme));
  }

  const double ceiling = cfg.ceiling_ms > 0.0 ? cfg.ceiling_ms
                                              : base.scheme.payload_ms + base.scheme.overhead_fail_ms;
  const double floor = cfg.floor_ms;
  auto csma_delay = [&](double sigma) {
    Scenario c = base;
    c.scheme = csma_counterpart(base.scheme, sigma);
    return min_delay_ms(c, lambda_tilde, cfg.solver);
  };
  auto ok = [&](double t) { return t <= r.t_min_aloha_ms; };

  // Log-spaced prescan, which also checks monotonicity in sigma.
  const int m = std::max(cfg.prescan, 2);
  std::vector<double> sig(m), t(m);
  for (int i = 0; i < m; ++i) {
    sig[i] = floor * std::pow(ceiling / floor, static_cast<double>(i) / (m - 1));
    t[i] = csma_delay(sig[i]);
  }
  for (int i = 1; i < m; ++i) {
    if (t[i] < t[i - 1] * (1.0 - 1e-9)) {
      r.non_monotone = true;
      std::ostringstream os;
      os << "CSMA minimum delay decreases in sigma near " << sig[i] << " ms";
      r.warnings.push_back(os.str());
      break;
    }
  }

  int last_ok = -1;
  for (int i = 0; i < m; ++i) {
    if (ok(t[i])) last_ok = i;
    else if (!r.non_monotone) break;
  }
  if (last_ok < 0) {
    r.below_floor = true;
    r.sigma_star_delay_ms = 0.0;
    r.t_min_csma_ms = t[0];
    r.warnings.emplace_back("CSMA loses to Aloha even at the sensing floor");
    return r;
  }
  if (last_ok == m - 1) {
    r.clipped_at_ceiling = true;
    r.sigma_star_delay_ms = ceiling;
    r.t_min_csma_ms = t[m - 1];
    r.warnings.emplace_back("CSMA beats Aloha up to the search ceiling");
    return r;
  }

  double lo = sig[last_ok], hi = sig[last_ok + 1];
  double t_lo = t[last_ok];
  while (hi - lo > cfg.tol_ms) {
    const double mid = 0.5 * (lo + hi);
    const double tm = csma_delay(mid);
    if (ok(tm)) {
      lo = mid;
      t_lo = tm;
    } else {
      hi = mid;
    }
  }
  r.sigma_star_delay_ms = lo;
  r.t_min_csma_ms = t_lo;
  return r;
}

std::vector<double> lambda_tilde_grid(const Scenario& base, int count) {
  const AccessScheme a = aloha_counterpart(base.scheme);
  const double top = (1.0 - 1e-3) * max_bit_throughput(a, base.encoding_rate);
  const double bottom = std::min(1e-4, 0.5 * top);
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i)
    g[i] = count == 1 ? bottom : bottom * std::pow(top / bottom, static_cast<double>(i) / (count - 1));
  return g;
}

}  // namespace sensedelay
