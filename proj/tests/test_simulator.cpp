#include <doctest.h>

#include <cmath>
#include <vector>

#include "sensedelay/delay.hpp"
#include "sensedelay/error.hpp"
#include "sensedelay/simulator.hpp"

using namespace sensedelay;

namespace {

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

struct ExactAloha {
  double mean_queue_total;
  double p;
  double throughput;
};

// Stationary law of the two-node connection-free Aloha queue chain, by
// power iteration on (Q1, k1, Q2, k2) truncated at `cap` packets.
ExactAloha exact_two_node(double lambda, double q0, const BackoffPolicy& b, int cap) {
  const int K = b.cutoff();
  const int per = (cap + 1) * (K + 1);
  auto idx = [&](int q1, int k1, int q2, int k2) {
    return (q1 * (K + 1) + k1) * per + q2 * (K + 1) + k2;
  };
  std::vector<double> pi(per * per, 0.0), nx(per * per);
  pi[idx(0, 0, 0, 0)] = 1.0;
  double queue = 0, att = 0, succ = 0;
  for (int it = 0; it < 20000; ++it) {
    std::fill(nx.begin(), nx.end(), 0.0);
    queue = att = succ = 0;
    for (int q1 = 0; q1 <= cap; ++q1)
      for (int k1 = 0; k1 <= K; ++k1)
        for (int q2 = 0; q2 <= cap; ++q2)
          for (int k2 = 0; k2 <= K; ++k2) {
            const double w = pi[idx(q1, k1, q2, k2)];
            if (w == 0.0) continue;
            for (int a1 = 0; a1 < 2; ++a1)
              for (int a2 = 0; a2 < 2; ++a2) {
                const double pa = (a1 ? lambda : 1 - lambda) * (a2 ? lambda : 1 - lambda);
                const int r1 = std::min(q1 + a1, cap), r2 = std::min(q2 + a2, cap);
                queue += w * pa * (r1 + r2);
                const double t1 = r1 > 0 ? q0 * b.q(k1) : 0.0;
                const double t2 = r2 > 0 ? q0 * b.q(k2) : 0.0;
                for (int x1 = 0; x1 < 2; ++x1)
                  for (int x2 = 0; x2 < 2; ++x2) {
                    const double px = (x1 ? t1 : 1 - t1) * (x2 ? t2 : 1 - t2);
                    if (px == 0.0) continue;
                    const double m = w * pa * px;
                    int n1 = r1, n2 = r2, s1 = k1, s2 = k2;
                    if (x1 && x2) {
                      s1 = std::min(k1 + 1, K);
                      s2 = std::min(k2 + 1, K);
                    } else if (x1) {
                      --n1;
                      s1 = 0;
                      succ += m;
                    } else if (x2) {
                      --n2;
                      s2 = 0;
                      succ += m;
                    }
                    att += m * (x1 + x2);
                    if (n1 == 0) s1 = 0;
                    if (n2 == 0) s2 = 0;
                    nx[idx(n1, s1, n2, s2)] += m;
                  }
              }
          }
    double diff = 0;
    for (std::size_t i = 0; i < pi.size(); ++i) diff += std::abs(nx[i] - pi[i]);
    pi.swap(nx);
    if (diff < 1e-13) break;
  }
  return {queue, succ / att, succ};
}

}  // namespace

TEST_CASE("two nodes with q0 = 1 collide forever") {
  Scenario s = aloha_free(2, 0.0, 1.0);
  SimConfig cfg{10'000, 0, 1, 3};
  const SimReport r = simulate(s, cfg);
  CHECK(r.departures == 0);
  CHECK(r.throughput_pkts_per_slot == 0.0);
  CHECK(r.p_hat == 0.0);
  CHECK(r.final_queue_total == 6);
  CHECK(r.conserved());
}

TEST_CASE("single node without contention") {
  Scenario s = aloha_free(1, 0.0, 1.0);
  s.scheme.connection = Connection::Based;
  s.scheme.overhead_success_ms = 3.0;  // tau_T = 4 at Delta_F = 1
  s.scheme.overhead_fail_ms = 1.0;
  for (double lambda : {0.1, 0.5}) {
    const SimReport r = simulate(s.with_aggregate_packet_rate(lambda), {400'000, 1'000, 5});
    CAPTURE(lambda);
    CHECK(r.p_hat == 1.0);
    CHECK(r.throughput_pkts_per_slot == doctest::Approx(std::min(lambda, 0.25)).epsilon(0.01));
    CHECK(r.conserved());
  }
}

TEST_CASE("two-node chain matches the simulator") {
  struct Case {
    double lambda, q0;
    BackoffPolicy b;
  };
  for (const Case& c : {Case{0.15, 0.5, BackoffPolicy::constant(0)},
                        Case{0.12, 0.8, BackoffPolicy::binary_exponential(1)},
                        Case{0.1, 0.9, BackoffPolicy::binary_exponential(2)}}) {
    const ExactAloha ex = exact_two_node(c.lambda, c.q0, c.b, 40);
    const SimReport r =
        simulate(aloha_free(2, 2 * c.lambda, c.q0, c.b), {4'000'000, 10'000, 17});
    CAPTURE(c.q0);
    CHECK(r.mean_queue_len * 2 == doctest::Approx(ex.mean_queue_total).epsilon(0.02));
    CHECK(std::abs(r.p_hat - ex.p) < 4 * r.p_hat_stderr + 1e-3);
    CHECK(r.throughput_pkts_per_slot == doctest::Approx(ex.throughput).epsilon(0.01));
  }
}

TEST_CASE("conservation and reproducibility") {
  const Scenario s = csma10(20, 0.02, 0.05, BackoffPolicy::binary_exponential(3));
  const SimConfig cfg{300'000, 10'000, 42};
  const SimReport a = simulate(s, cfg);
  const SimReport b = simulate(s, cfg);
  CHECK(a == b);
  CHECK(a.conserved());
  SimConfig other = cfg;
  other.seed = 43;
  CHECK_FALSE(simulate(s, other) == a);
  CHECK(a.throughput_pkts_per_slot <= 0.02 * 1.05);
}

TEST_CASE("Little and sojourn delays agree and match the analysis") {
  const Scenario s = aloha_free(50, 0.2, 0.03);
  const SimReport r = simulate(s, {10'000'000, 100'000, 3});
  const DelayResult d = mean_queueing_delay(s, FixedPointForm::ExactFiniteN);
  CHECK(r.delay_sojourn_slots == doctest::Approx(r.delay_little_slots).epsilon(0.02));
  CHECK(r.delay_little_slots == doctest::Approx(d.t_slots).epsilon(0.05));
  CHECK(r.alpha_hat == 1.0);
  CHECK_FALSE(r.saturated_flag);
  CHECK(r.conserved());
}

TEST_CASE("CSMA accessibility and success probability") {
  const Scenario s = csma10(50, 0.02, 0.005);
  const SimReport r = simulate(s, {3'000'000, 50'000, 4});
  const SteadyState st = solve_steady_state(s, FixedPointForm::ExactFiniteN);
  CHECK(std::abs(r.p_hat - st.p) < 3 * r.p_hat_stderr);
  CHECK(r.alpha_hat == doctest::Approx(st.alpha).epsilon(0.005));
  CHECK(r.delay_little_slots == doctest::Approx(mean_queueing_delay(s).t_slots).epsilon(0.05));
}

TEST_CASE("saturation detector from a backlogged start") {
  const Scenario s = aloha_free(50, 0.2, 0.03);
  const double upper = unsaturated_region(Family::Aloha, holding_times(s.scheme), 50, 0.2,
                                          s.backoff)
                           .q0_upper;
  SimConfig cfg{2'000'000, 0, 8, 50};
  CHECK(simulate(s.with_q0(1.05 * upper), cfg).saturated_flag);
  CHECK_FALSE(simulate(s.with_q0(0.95 * upper), cfg).saturated_flag);
}

TEST_CASE("non-integer holding times are rejected") {
  Scenario s = csma10(10, 0.01, 0.05);
  s.scheme.slot_ms = 0.7;
  try {
    simulate(s, {1000, 0, 1});
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
    CHECK(std::string(e.what()).find("slot_ms") != std::string::npos);
  }
  CHECK_THROWS_AS(simulate(s.with_q0(0.1), {10, 10, 1}), Error);
}

TEST_CASE("RA-SDT timing") {
  const HoldingTimes b4 = integer_holding_times(ra_sdt_scheme(RaSdtVariant::SensingBased4Step));
  CHECK(b4.tau_f == 4.0);
  CHECK(b4.tau_t == 16.0);
  const HoldingTimes b2 = integer_holding_times(ra_sdt_scheme(RaSdtVariant::SensingBased2Step));
  CHECK(b2.tau_t == 12.0);
  CHECK(b2.tau_f == 12.0);
  const AccessScheme f2 = ra_sdt_scheme(RaSdtVariant::SensingFree2Step);
  CHECK(f2.family == Family::Aloha);
  CHECK(f2.connection == Connection::Free);
  CHECK(f2.slot_ms == 6.0);
  const AccessScheme f4 = ra_sdt_scheme(RaSdtVariant::SensingFree4Step);
  CHECK(f4.slot_ms == 2.0);
  CHECK(holding_times(f4).tau_t == 4.0);
  for (auto v : {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step,
                 RaSdtVariant::SensingBased2Step, RaSdtVariant::SensingBased4Step})
    CHECK(ra_sdt_variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(ra_sdt_variant_from_string("3-step"), Error);
}

TEST_CASE("RA-SDT mute logic equals the generic engine") {
  Scenario s;
  s.n = 100;
  s.q0 = 0.02;
  s.encoding_rate = kRaSdtEncodingRate;
  s.bit_rate_per_node = 0.004 / s.n;
  const SimConfig cfg{200'000, 5'000, 77};
  for (auto v : {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step,
                 RaSdtVariant::SensingBased2Step, RaSdtVariant::SensingBased4Step}) {
    for (const BackoffPolicy& b : {BackoffPolicy::constant(0), BackoffPolicy::binary_exponential(4)}) {
      Scenario m = s;
      m.backoff = b;
      const SimReport ra = simulate_ra_sdt(v, m, cfg);
      m.scheme = ra_sdt_scheme(v);
      CAPTURE(to_string(v));
      CHECK(ra == simulate(m, cfg));
      CHECK(ra.departures > 0);
    }
  }
}
