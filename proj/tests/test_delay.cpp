#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sensedelay/delay.hpp"
#include "sensedelay/error.hpp"
#include "sensedelay/renewal.hpp"

using namespace sensedelay;

namespace {

Scenario aloha_free(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s;
  s.n = n;
  s.scheme.family = Family::Aloha;
  s.scheme.connection = Connection::Free;
  s.scheme.payload_ms = 1.0;
  s.backoff = b;
  s.q0 = q0;
  return s.with_aggregate_packet_rate(lambda_hat);
}

Scenario aloha_based(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s = aloha_free(n, 0.0, q0, b);
  s.scheme.connection = Connection::Based;
  s.scheme.payload_ms = 0.5;
  s.scheme.overhead_success_ms = 7.5;
  s.scheme.overhead_fail_ms = 2.0;
  return s.with_aggregate_packet_rate(lambda_hat);
}

// tau_T = tau_F = 10
Scenario csma10(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s = aloha_free(n, 0.0, q0, b);
  s.scheme.family = Family::Csma;
  s.scheme.payload_ms = 2.0;
  s.scheme.overhead_success_ms = s.scheme.overhead_fail_ms = 1.0;
  s.scheme.slot_ms = 0.3;
  return s.with_aggregate_packet_rate(lambda_hat);
}

// tau_T = 16, tau_F = 4
Scenario csma_based(int n, double lambda_hat, double q0, BackoffPolicy b = BackoffPolicy::constant(0)) {
  Scenario s = aloha_based(n, 0.0, q0, b);
  s.scheme.family = Family::Csma;
  s.scheme.slot_ms = 0.5;
  return s.with_aggregate_packet_rate(lambda_hat);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("unconditional accessibility") {
  for (double p : {0.0, 0.1, 0.5, 1.0})
    CHECK(alpha_unconditional(Family::Aloha, {1.0, 0.0}, p) == 1.0);
  CHECK(alpha_unconditional(Family::Aloha, {4.0, 0.0}, 1.0) == 1.0);
  CHECK(alpha_unconditional(Family::Csma, {16.0, 4.0}, 1.0) == 1.0);
  CHECK(alpha_unconditional(Family::Csma, {10.0, 10.0}, 0.5) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(alpha_unconditional(Family::Aloha, {4.0, 0.0}, 0.0) == 1.0);

  // Finite-n forms approach the large-n forms.
  const double big = alpha_unconditional(Family::Csma, {16.0, 4.0}, 0.7);
  const double small = alpha_unconditional(Family::Csma, {16.0, 4.0}, 0.7, FixedPointForm::ExactFiniteN, 1000000);
  CHECK(small == doctest::Approx(big).epsilon(1e-5));
}

TEST_CASE("conditional accessibility") {
  const auto cb = BackoffPolicy::constant(0);
  for (Regime r : {Regime::Unsaturated, Regime::Saturated})
    CHECK(alpha_tilde(Family::Aloha, {1.0, 0.0}, 0.6, 0.01, 0.1, cb, r) == 1.0);

  const double expect = 1.0 / (1.0 - 0.012) * (1.0 / (1.0 - 3.0 * 0.9 * std::log(0.9)));
  const double at = alpha_tilde(Family::Aloha, {4.0, 0.0}, 0.9, 0.004, 0.1, cb, Regime::Unsaturated);
  CHECK(at == doctest::Approx(expect).epsilon(1e-14));
  CHECK(at == doctest::Approx(0.7878).epsilon(1e-3));

  const double sat = alpha_tilde(Family::Aloha, {4.0, 0.0}, 0.5, 0.0, 0.02, cb, Regime::Saturated);
  CHECK(sat == doctest::Approx(1.0 / (1.0 - 3.0 * 0.5 * std::log(0.5) - 3.0 * 0.5 * 0.02)).epsilon(1e-14));

  CHECK_THROWS_AS(alpha_tilde(Family::Aloha, {4.0, 0.0}, 0.9, 0.5, 0.1, cb, Regime::Unsaturated), Error);
  try {
    alpha_tilde(Family::Csma, {10.0, 10.0}, 0.5, 0.05, 0.1, cb, Regime::Unsaturated);
    FAIL("expected InconsistentRegime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentRegime);
  }
}

TEST_CASE("steady state classification") {
  const Scenario in = aloha_free(50, 0.2, 0.04);
  const SteadyState st = solve_steady_state(in);
  CHECK(st.regime == Regime::Unsaturated);
  CHECK(st.p == doctest::Approx(0.7716).epsilon(1e-4));
  CHECK(st.mu >= 0.004);
  CHECK(st.lambda < st.mu);
  CHECK(st.rho == doctest::Approx(st.lambda / st.mu));
  CHECK(st.alpha == 1.0);
  CHECK(st.alpha_tilde == 1.0);
  CHECK(st.omega == doctest::Approx(st.lambda / st.p));

  const SteadyState above = solve_steady_state(aloha_free(50, 0.2, 0.06));
  CHECK(above.regime == Regime::Saturated);
  CHECK(above.rho == 1.0);
  CHECK(above.alpha_tilde == 1.0);
  CHECK(above.lambda >= above.mu);
  CHECK(above.omega == doctest::Approx(above.mu / above.p));

  const SteadyState below = solve_steady_state(aloha_free(50, 0.2, 0.004));
  CHECK(below.regime == Regime::Saturated);
  CHECK(below.lambda >= below.mu);

  const SteadyState over = solve_steady_state(aloha_free(50, 0.4, 0.01));
  CHECK(over.regime == Regime::Saturated);
  CHECK_FALSE(over.has_roots);
  CHECK(over.p == doctest::Approx(saturated_root(50, 0.01, BackoffPolicy::constant(0))));
}

TEST_CASE("regime agrees with lambda < mu across the q0 range") {
  for (auto make : {aloha_based, csma10, csma_based}) {
    for (int K : {0, 3}) {
      const auto b = BackoffPolicy::binary_exponential(K);
      const Scenario base = make(50, 0.0, 0.1, b);
      const double lmax = max_throughput(base.scheme);
      const Scenario s = make(50, 0.5 * lmax, 0.1, b);
      for (int i = 1; i < 200; ++i) {
        const double q0 = i / 200.0;
        const SteadyState st = solve_steady_state(s.with_q0(q0));
        if (st.regime == Regime::Unsaturated) {
          CHECK(st.lambda < st.mu);
          CHECK(st.region.contains(q0));
        } else if (st.region.contains(q0) == false && q0 <= st.region.q0_lower) {
          CHECK(st.lambda >= st.mu * (1.0 - 1e-12));
        }
        const double mu_formula = st.regime == Regime::Saturated
                                      ? st.p * st.alpha * q0 / f_of_p(st.p, b)
                                      : st.mu;
        CHECK(service_rate(s.scheme.family, st.holding, st.p, st.alpha_tilde, q0, b) ==
              doctest::Approx(mu_formula).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("renewal model structure and stationary laws") {
  for (Family f : {Family::Aloha, Family::Csma}) {
    for (int K : {0, 1, 2, 4}) {
      for (double p : {0.3, 0.77, 1.0}) {
        const auto b = BackoffPolicy::binary_exponential(K);
        const HoldingTimes h = f == Family::Aloha ? HoldingTimes{4.0, 0.0} : HoldingTimes{16.0, 4.0};
        const MarkovRenewalModel m = build_renewal_model(f, h, p, 0.8, 0.3, b);
        CHECK(m.size() == (f == Family::Aloha ? K + 2u : 2u * K + 3u));
        CHECK(m.row_sum_error() <= 1e-12);
        const auto pi = m.stationary();
        const auto cf = closed_form_stationary(f, p, 0.8, 0.3, K);
        double total = 0.0;
        for (std::size_t u = 0; u < pi.size(); ++u) {
          CHECK(std::abs(pi[u] - cf[u]) <= 1e-10);
          total += pi[u];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        const auto lim = m.limiting();
        double lt = 0.0;
        for (double v : lim) lt += v;
        CHECK(lt == doctest::Approx(1.0).epsilon(1e-12));
        // sum phi q = pi~_T / (p a~ tau_T)
        CHECK(m.intent_request_sum() == doctest::Approx(lim[0] / (p * 0.8 * h.tau_t)).epsilon(1e-10));
        if (f == Family::Aloha && p == 1.0)
          for (int k = 1; k <= K; ++k) CHECK(pi[1 + k] == 0.0);
      }
    }
  }
}

TEST_CASE("worked stationary examples") {
  const auto b = BackoffPolicy::binary_exponential(3);
  const MarkovRenewalModel a = build_renewal_model(Family::Aloha, {4.0, 0.0}, 0.6, 0.7, 0.2, b);
  const auto pa = a.stationary();
  CHECK(pa[1] == doctest::Approx((1.0 - 0.7 * 0.2) * pa[0]).epsilon(1e-12));
  const MarkovRenewalModel c = build_renewal_model(Family::Csma, {16.0, 4.0}, 0.6, 0.7, 0.2, b);
  const auto pc = c.stationary();
  for (int k = 0; k < 3; ++k)
    CHECK(pc[3 + 2 + k] == doctest::Approx(std::pow(0.4, k + 1) * pc[0]).epsilon(1e-12));
}

TEST_CASE("model reproduces steady-state accessibility and omega") {
  const Scenario cases[] = {aloha_based(50, 0.08, 0.02, BackoffPolicy::binary_exponential(2)),
                            csma_based(50, 0.02, 0.01, BackoffPolicy::binary_exponential(3)),
                            csma10(50, 0.02, 0.005)};
  for (const Scenario& s : cases) {
    for (double q0 : {s.q0, 0.5}) {
      const Scenario t = s.with_q0(q0);
      const SteadyState st = solve_steady_state(t);
      const MarkovRenewalModel m = build_renewal_model(t, st);
      const double phi = m.intent_sum();
      const double expect_at = st.alpha / (1.0 - st.rho + st.rho * phi);
      CHECK(st.alpha_tilde == doctest::Approx(expect_at).epsilon(1e-10));
      const double omega = st.rho * st.alpha_tilde / st.alpha * m.intent_request_sum();
      CHECK(st.omega == doctest::Approx(omega).epsilon(1e-10));
    }
  }
}

TEST_CASE("generic engine matches the closed forms") {
  double worst = 0.0;
  int points = 0;
  for (Family f : {Family::Aloha, Family::Csma}) {
    for (bool beb : {false, true}) {
      for (int K = 0; K <= 4; ++K) {
        const auto b = beb ? BackoffPolicy::binary_exponential(K) : BackoffPolicy::constant(K);
        for (double p : {0.2, 0.5, 0.77, 0.95}) {
          for (double q0 : {0.01, 0.05, 0.3}) {
            const HoldingTimes h = f == Family::Aloha ? HoldingTimes{4.0, 0.0} : HoldingTimes{10.0, 7.0};
            const auto g = service_moments_generic(build_renewal_model(f, h, p, 0.8, q0, b));
            const auto c = service_moments_closed_form(f, h, p, 0.8, q0, b);
            worst = std::max({worst, rel(c.d1, g.d1), rel(c.d2, g.d2)});
            CHECK(g.d1 >= h.tau_t);
            CHECK(g.d2 >= g.d1 * g.d1 * (1.0 - 1e-12));
            ++points;
          }
        }
      }
    }
  }
  CHECK(points >= 240);
  CHECK(worst <= 1e-9);
}

TEST_CASE("service-time PGF sanity") {
  const MarkovRenewalModel m = build_renewal_model(Family::Csma, {16.0, 4.0}, 0.4, 0.6, 0.1,
                                                   BackoffPolicy::binary_exponential(4));
  CHECK(service_pgf_at_one(m) == doctest::Approx(1.0).epsilon(1e-12));

  MarkovRenewalModel single;
  single.states = {{StateKind::T, 0}};
  single.transition = {{1.0}};
  single.holding = {{Holding::Kind::Deterministic, 5.0}};
  single.request_intent = {0.0};
  single.request_prob = {0.0};
  const auto d = service_moments_generic(single);
  CHECK(d.d1 == 5.0);
  CHECK(d.d2 == 25.0);

  const auto imm = service_moments_generic(
      build_renewal_model(Family::Aloha, {3.0, 0.0}, 1.0, 1.0, 1.0, BackoffPolicy::constant(0)));
  CHECK(imm.d1 == doctest::Approx(3.0));

  const auto geo = service_moments_closed_form(Family::Aloha, {1.0, 0.0}, 1.0, 1.0, 0.5,
                                               BackoffPolicy::constant(0));
  CHECK(geo.d1 == doctest::Approx(2.0));

  const double p = 0.6, at = 0.7, q0 = 0.2;
  const auto c0 = service_moments_closed_form(Family::Csma, {16.0, 4.0}, p, at, q0, BackoffPolicy::constant(0));
  CHECK(c0.d1 == doctest::Approx(16.0 + 4.0 * (1 - p) / p + 1.0 / (p * at * q0)).epsilon(1e-14));

  CHECK_THROWS_AS(service_moments_generic(build_renewal_model(Family::Aloha, {4.0, 0.0}, 0.0, 0.8, 0.1,
                                                              BackoffPolicy::constant(2))),
                  Error);
}

TEST_CASE("mean service time is the inverse service rate") {
  for (const Scenario& s : {aloha_free(50, 0.2, 0.03), aloha_based(50, 0.1, 0.02),
                            csma10(50, 0.02, 0.004, BackoffPolicy::binary_exponential(4)),
                            csma_based(100, 0.03, 0.005, BackoffPolicy::binary_exponential(2))}) {
    const SteadyState st = solve_steady_state(s);
    REQUIRE(st.regime == Regime::Unsaturated);
    const auto m = service_moments_closed_form(s, st);
    CHECK(m.d1 == doctest::Approx(1.0 / st.mu).epsilon(1e-10));
    const auto g = service_moments_generic(build_renewal_model(s, st));
    CHECK(g.d1 == doctest::Approx(m.d1).epsilon(1e-9));
  }
}

TEST_CASE("mean queueing delay") {
  const Scenario s = aloha_based(50, 0.1, 0.02);
  const DelayResult d = mean_queueing_delay(s);
  REQUIRE(d.finite);
  CHECK(d.t_ms == 2.0 * d.t_slots);
  CHECK(d.t_slots >= d.moments.d1);

  const DelayResult idle = mean_queueing_delay(aloha_based(50, 50 * 1e-9, 0.2));
  CHECK(std::abs(idle.t_slots - idle.moments.d1) < 1e-6);

  const ServiceMoments det{4.0, 16.0};
  const double lam = 0.1;
  CHECK(queueing_delay_from_moments(lam, det) ==
        doctest::Approx(lam * 4.0 * 3.0 / (2.0 * (1.0 - 0.4)) + 4.0).epsilon(1e-15));

  const DelayResult sat = mean_queueing_delay(aloha_free(50, 0.2, 0.2));
  CHECK_FALSE(sat.finite);
  CHECK(std::isinf(sat.t_slots));
  CHECK(std::isinf(sat.t_ms));
}

TEST_CASE("delay decreases with q0 inside the region and BEB costs more") {
  for (auto make : {aloha_free, csma10}) {
    const double lh = make == aloha_free ? 0.2 : 0.02;
    const Scenario cb = make(50, lh, 0.01, BackoffPolicy::constant(0));
    const Scenario beb = make(50, lh, 0.01, BackoffPolicy::binary_exponential(4));
    const SteadyState a = solve_steady_state(cb), b = solve_steady_state(beb);
    const double lo = std::max(a.region.q0_lower, b.region.q0_lower);
    const double hi = std::min(a.region.q0_upper, b.region.q0_upper);
    double prev = INFINITY;
    for (int i = 1; i < 50; ++i) {
      const double q0 = lo + (hi - lo) * i / 50.0;
      const double tc = mean_queueing_delay(cb.with_q0(q0)).t_slots;
      const double tb = mean_queueing_delay(beb.with_q0(q0)).t_slots;
      CHECK(tc <= prev);
      CHECK(tb >= tc);
      prev = tc;
    }
  }
}

TEST_CASE("optimal q0") {
  const Scenario s = aloha_free(50, 0.2, 0.01);
  const OptimalQ0 o = optimal_q0(s);
  const RootPair r = unsaturated_roots(Family::Aloha, {1.0, 0.0}, 0.2);
  CHECK(o.q0_star == doctest::Approx(-std::log(r.p_small) / 50 - 1e-6).epsilon(1e-12));
  CHECK(o.q0_star == doctest::Approx(0.0509).epsilon(2e-3));
  CHECK(o.delay.finite);
  CHECK(o.monotone);
  CHECK(o.delay_relaxed.t_slots >= o.delay.t_slots);

  for (int K : {1, 2, 4}) {
    const Scenario b = csma10(50, 0.02, 0.01, BackoffPolicy::binary_exponential(K));
    const OptimalQ0 ob = optimal_q0(b);
    const double ps = unsaturated_roots(Family::Csma, {10.0, 10.0}, 0.02).p_small;
    const double closed = -std::log(ps) / 50 *
                          (std::ldexp(1.0, K) * std::pow(1 - ps, K + 1) / (1 - 2 * ps) - ps / (1 - 2 * ps));
    CHECK(ob.q0_star == doctest::Approx(std::min(closed - 1e-6, 1.0)).epsilon(1e-10));
  }

  try {
    optimal_q0(aloha_free(50, 0.37, 0.01));
    FAIL("expected SaturatedError");
  } catch (const SaturatedError& e) {
    CHECK(e.code() == ErrorCode::Saturated);
    CHECK(e.lambda_hat_max() == doctest::Approx(1.0 / std::numbers::e));
  }

  SolverOptions opt;
  opt.epsilon = 1e-4;
  CHECK(optimal_q0(s, opt).q0_star == doctest::Approx(o.q0_star + 1e-6 - 1e-4).epsilon(1e-12));
}
