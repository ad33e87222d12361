#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

#include "sensedelay/delay.hpp"
#include "sensedelay/error.hpp"
#include "sensedelay/experiment.hpp"
#include "sensedelay/lambertw.hpp"
#include "sensedelay/renewal.hpp"

namespace sensedelay {
namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Check {
  std::string name;
  std::function<Outcome()> run;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

template <class F>
double bisect(F f, double lo, double hi) {
  const bool rising = f(lo) < 0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((f(mid) < 0) == rising ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Scenario aloha_free(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s;
  s.n = n;
  s.scheme.payload_ms = 1.0;
  s.backoff = b;
  s.q0 = q0;
  return s.with_aggregate_packet_rate(lambda_hat);
}

Scenario csma10(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s = aloha_free(n, 0.0, q0, b);
  s.scheme.family = Family::Csma;
  s.scheme.payload_ms = 2.0;
  s.scheme.overhead_success_ms = s.scheme.overhead_fail_ms = 1.0;
  s.scheme.slot_ms = 0.3;
  return s.with_aggregate_packet_rate(lambda_hat);
}

AccessScheme ra_sdt_base(Connection c) {
  AccessScheme s;
  s.connection = c;
  s.payload_ms = kRaSdtPayloadMs;
  if (c == Connection::Free) {
    s.overhead_success_ms = s.overhead_fail_ms = 5.5;
  } else {
    s.overhead_success_ms = 7.5;
    s.overhead_fail_ms = 2.0;
  }
  return s;
}

Outcome lambert_identity() {
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = -1.0 / std::numbers::e + 1e-10 + i * 0.05;
    const double w0 = lambert_w(Branch::Principal, x);
    worst = std::max(worst, std::abs(w0 * std::exp(w0) - x) / std::max(std::abs(x), 1e-3));
    if (x < 0) {
      const double wm = lambert_w(Branch::Minus1, x);
      worst = std::max(worst, std::abs(wm * std::exp(wm) - x) / std::max(std::abs(x), 1e-3));
    }
  }
  return {worst < 1e-12, "max residual " + fmt(worst)};
}

Outcome max_throughput_aloha() {
  const double v = max_throughput(Family::Aloha, {1.0, 0.0});
  const double e = rel(v, 1.0 / std::numbers::e);
  return {e < 1e-12, "lambda_hat_max " + fmt(v)};
}

Outcome max_throughput_csma() {
  const double t = 10.0, f = 10.0;
  const double oracle = bisect(
      [&](double lh) {
        const double d = 1.0 - lh * (t - f);
        return lh * (f + 1.0) / d * std::exp(-lh * f / d) - 1.0 / std::numbers::e;
      },
      1e-6, 0.09);
  const double v = max_throughput(Family::Csma, {t, f});
  return {rel(v, oracle) < 1e-8, "lambda_hat_max " + fmt(v) + " oracle " + fmt(oracle)};
}

Outcome f_beb() {
  double worst = 0.0;
  for (int K = 0; K <= 8; ++K)
    for (double p : {0.05, 0.2, 0.37, 0.45}) {
      const BackoffPolicy b = BackoffPolicy::binary_exponential(K);
      double sum = std::pow(1.0 - p, K) / b.q(K);
      for (int k = 0; k < K; ++k) sum += p * std::pow(1.0 - p, k) / b.q(k);
      const double closed = std::ldexp(1.0, K) * std::pow(1.0 - p, K + 1) / (1.0 - 2.0 * p) -
                            p / (1.0 - 2.0 * p);
      worst = std::max({worst, rel(f_of_p(p, b), sum), rel(f_of_p(p, b), closed)});
    }
  return {worst < 1e-12, "max rel err " + fmt(worst)};
}

Outcome roots_are_fixed_points() {
  double worst = 0.0;
  for (double lh : {0.05, 0.2, 0.35}) {
    const RootPair r = unsaturated_roots(Family::Aloha, {1.0, 0.0}, lh);
    worst = std::max({worst, std::abs(unsaturated_map(Family::Aloha, {1.0, 0.0}, lh, r.p_small) - r.p_small),
                      std::abs(unsaturated_map(Family::Aloha, {1.0, 0.0}, lh, r.p_large) - r.p_large)});
  }
  for (double lh : {0.005, 0.02, 0.04}) {
    const RootPair r = unsaturated_roots(Family::Csma, {10.0, 10.0}, lh);
    worst = std::max({worst, std::abs(unsaturated_map(Family::Csma, {10.0, 10.0}, lh, r.p_small) - r.p_small),
                      std::abs(unsaturated_map(Family::Csma, {10.0, 10.0}, lh, r.p_large) - r.p_large)});
  }
  return {worst < 1e-10, "max |map(p) - p| " + fmt(worst)};
}

Outcome throughput_bounds() {
  const double free = throughput_optimal_bound(ra_sdt_base(Connection::Free));
  const double based = throughput_optimal_bound(ra_sdt_base(Connection::Based));
  const bool ok = std::abs(free - 2.6680) < 5e-4 && std::abs(based - 0.8893) < 5e-4;
  return {ok, "free " + fmt(free) + " ms, based " + fmt(based) + " ms"};
}

Outcome throughput_bound_equalises() {
  double worst = 0.0;
  for (Connection c : {Connection::Free, Connection::Based}) {
    const AccessScheme base = ra_sdt_base(c);
    const double sigma = throughput_optimal_bound(base);
    const double a = max_bit_throughput(derive_slot(aloha_counterpart(base)), 1.0);
    const double cs = max_bit_throughput(derive_slot(csma_counterpart(base, sigma)), 1.0);
    worst = std::max(worst, rel(cs, a));
  }
  return {worst < 1e-6, "max rel gap " + fmt(worst)};
}

Outcome moments_grid() {
  double worst = 0.0;
  int points = 0;
  for (Family f : {Family::Aloha, Family::Csma})
    for (bool beb : {false, true})
      for (int K = 0; K <= 4; ++K) {
        const auto b = beb ? BackoffPolicy::binary_exponential(K) : BackoffPolicy::constant(K);
        for (double p : {0.2, 0.35, 0.5, 0.77, 0.95})
          for (double q0 : {0.01, 0.05, 0.3}) {
            const HoldingTimes h = f == Family::Aloha ? HoldingTimes{4.0, 0.0} : HoldingTimes{10.0, 7.0};
            const auto g = service_moments_generic(build_renewal_model(f, h, p, 0.8, q0, b));
            const auto c = service_moments_closed_form(f, h, p, 0.8, q0, b);
            worst = std::max({worst, rel(c.d1, g.d1), rel(c.d2, g.d2)});
            ++points;
          }
      }
  return {points >= 300 && worst <= 1e-9,
          std::to_string(points) + " points, max rel err " + fmt(worst)};
}

Outcome optimal_q0_grid() {
  double worst = 0.0;
  for (const Scenario& s : {aloha_free(50, 0.2, 0.01), csma10(50, 0.02, 0.01),
                            aloha_free(50, 0.2, 0.01, BackoffPolicy::binary_exponential(4))}) {
    const OptimalQ0 o = optimal_q0(s);
    if (!o.delay.finite) return {false, "q0* delay not finite"};
    const UnsaturatedRegion& r = o.region;
    double best = INFINITY;
    for (int i = 0; i < 50; ++i) {
      const double q = r.q0_lower + (r.q0_upper - r.q0_lower) * (i + 0.5) / 50.0;
      const DelayResult d = mean_queueing_delay(s.with_q0(q));
      if (d.finite) best = std::min(best, d.t_slots);
    }
    worst = std::max(worst, o.delay.t_slots / best - 1.0);
  }
  return {worst <= 1e-9, "max excess over grid minimum " + fmt(worst)};
}

Outcome optimal_q0_closed_form() {
  double worst = 0.0;
  const Scenario s = aloha_free(50, 0.2, 0.01);
  const RootPair r = unsaturated_roots(Family::Aloha, {1.0, 0.0}, 0.2);
  worst = rel(optimal_q0(s).q0_star, -std::log(r.p_small) / 50 - 1e-6);
  const double ps = unsaturated_roots(Family::Csma, {10.0, 10.0}, 0.02).p_small;
  for (int K : {1, 2, 4}) {
    const double closed = -std::log(ps) / 50 *
                          (std::ldexp(1.0, K) * std::pow(1 - ps, K + 1) / (1 - 2 * ps) - ps / (1 - 2 * ps));
    const double got = optimal_q0(csma10(50, 0.02, 0.01, BackoffPolicy::binary_exponential(K))).q0_star;
    worst = std::max(worst, rel(got, std::min(closed - 1e-6, 1.0)));
  }
  return {worst < 1e-10, "max rel err " + fmt(worst)};
}

Outcome simulation_low_q0() {
  const Scenario s = aloha_free(50, 0.2, 0.03);
  const SimReport r = simulate(s, {2'000'000, 50'000, 11});
  const DelayResult d = mean_queueing_delay(s, FixedPointForm::ExactFiniteN);
  const double e = rel(r.delay_little_slots, d.t_slots);
  return {e < 0.05 && r.conserved() && !r.saturated_flag,
          "sim " + fmt(r.delay_little_slots) + " vs analysis " + fmt(d.t_slots) + " slots"};
}

Outcome simulation_conservation() {
  const Scenario s = csma10(20, 0.02, 0.05, BackoffPolicy::binary_exponential(3));
  const SimReport a = simulate(s, {300'000, 10'000, 42});
  const SimReport b = simulate(s, {300'000, 10'000, 42});
  return {a.conserved() && a == b,
          std::to_string(a.arrivals) + " arrivals, " + std::to_string(a.departures) + " departures"};
}

Outcome ra_sdt_equivalence() {
  Scenario s;
  s.n = 100;
  s.q0 = 0.02;
  s.encoding_rate = kRaSdtEncodingRate;
  s.bit_rate_per_node = 0.004 / s.n;
  const SimConfig cfg{50'000, 2'000, 77};
  int runs = 0;
  for (auto v : {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step,
                 RaSdtVariant::SensingBased2Step, RaSdtVariant::SensingBased4Step})
    for (const BackoffPolicy& b : {BackoffPolicy::constant(0), BackoffPolicy::binary_exponential(4)}) {
      Scenario m = s;
      m.backoff = b;
      const SimReport ra = simulate_ra_sdt(v, m, cfg);
      m.scheme = ra_sdt_scheme(v);
      if (!(ra == simulate(m, cfg))) return {false, std::string("mismatch for ") + to_string(v)};
      ++runs;
    }
  return {true, std::to_string(runs) + " identical runs"};
}

}  // namespace

Table run_validation(int jobs) {
  const std::vector<Check> checks = {
      {"lambert_w_identity", lambert_identity},
      {"aloha_max_throughput", max_throughput_aloha},
      {"csma_max_throughput", max_throughput_csma},
      {"beb_f_closed_form", f_beb},
      {"roots_are_fixed_points", roots_are_fixed_points},
      {"throughput_optimal_bound_values", throughput_bounds},
      {"throughput_optimal_bound_equalises", throughput_bound_equalises},
      {"service_moments_generic_vs_closed", moments_grid},
      {"optimal_q0_vs_grid", optimal_q0_grid},
      {"optimal_q0_closed_form", optimal_q0_closed_form},
      {"simulation_vs_analysis_low_q0", simulation_low_q0},
      {"simulation_conservation", simulation_conservation},
      {"ra_sdt_mute_logic_equivalence", ra_sdt_equivalence},
  };
  std::vector<Outcome> out(checks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < checks.size();) {
      try {
        out[i] = checks[i].run();
      } catch (const std::exception& e) {
        out[i] = {false, std::string("threw: ") + e.what()};
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::clamp(jobs, 1, static_cast<int>(checks.size()));
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Table table;
  table.columns = {"check", "passed", "detail"};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    table.rows.push_back({checks[i].name, out[i].passed, out[i].detail});
    if (!out[i].passed) ++table.failures;
  }
  table.notes.push_back(std::to_string(checks.size() - table.failures) + "/" +
                        std::to_string(checks.size()) + " checks passed");
  return table;
}

}  // namespace sensedelay
