#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sensedelay/error.hpp"
#include "sensedelay/fixed_point.hpp"

using namespace sensedelay;

namespace {

constexpr double kE = std::numbers::e;

const HoldingTimes kAlohaFree{1.0, 0.0};
const HoldingTimes kCsma10{10.0, 10.0};

double f_terms(double p, const BackoffPolicy& b) {
  const int K = b.cutoff();
  double s = std::pow(1.0 - p, K) / b.q(K);
  for (int k = 0; k < K; ++k) s += p * std::pow(1.0 - p, k) / b.q(k);
  return s;
}

double f_beb_closed(double p, int K) {
  return std::ldexp(1.0, K) * std::pow(1.0 - p, K + 1) / (1.0 - 2.0 * p) - p / (1.0 - 2.0 * p);
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

// Damped direct iteration of the map from p = 1.
template <class F>
double damped_iterate(F map) {
  double p = 1.0;
  for (int i = 0; i < 100000; ++i) p = 0.5 * p + 0.5 * map(p);
  return p;
}

}  // namespace

TEST_CASE("f(p) by summation") {
  auto cb = BackoffPolicy::constant(4);
  for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) CHECK(f_of_p(p, cb) == doctest::Approx(1.0).epsilon(1e-15));
  for (int K = 0; K <= 6; ++K) {
    CHECK(f_of_p(1.0, BackoffPolicy::binary_exponential(K)) == 1.0);
    CHECK(f_of_p(0.0, BackoffPolicy::binary_exponential(K)) == std::ldexp(1.0, K));
  }
  CHECK(f_of_p(0.5, BackoffPolicy::binary_exponential(2)) == doctest::Approx(2.0).epsilon(1e-15));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double p = u(rng);
    if (std::abs(p - 0.5) < 1e-3) p += 0.01;
    const int K = 1 + i % 6;
    const auto beb = BackoffPolicy::binary_exponential(K);
    CHECK(f_of_p(p, beb) == doctest::Approx(f_beb_closed(p, K)).epsilon(1e-10));
    CHECK(f_of_p(p, beb) == doctest::Approx(f_terms(p, beb)).epsilon(1e-14));
  }
}

TEST_CASE("maximum throughput") {
  CHECK(max_throughput(Family::Aloha, kAlohaFree) == doctest::Approx(1.0 / kE).epsilon(1e-15));
  CHECK(max_throughput(Family::Aloha, HoldingTimes{4.0, 0.0}) == doctest::Approx(0.17496).epsilon(1e-4));

  // Roots exist iff b e^{-a} < 1/e; bisect that condition in lambda_hat.
  auto cond = [](double lh) {
    const double d = 1.0 - lh * (10.0 - 10.0);
    const double a = lh * 10.0 / d, b = lh * 11.0 / d;
    return b * std::exp(-a) - 1.0 / kE;
  };
  const double oracle = bisect(cond, 1e-6, 0.09);
  CHECK(max_throughput(Family::Csma, kCsma10) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(oracle == doctest::Approx(0.0625).epsilon(1e-2));

  // tau_F -> 0 limit.
  CHECK(max_throughput(Family::Csma, HoldingTimes{5.0, 1e-9}) ==
        doctest::Approx(1.0 / (kE + 5.0)).epsilon(1e-6));
  CHECK(max_throughput(Family::Csma, HoldingTimes{5.0, 0.0}) == doctest::Approx(1.0 / (kE + 5.0)));
}

TEST_CASE("Aloha unsaturated roots against independent oracles") {
  const double lh = 0.2;
  const RootPair r = unsaturated_roots(Family::Aloha, kAlohaFree, lh);
  const double pl = damped_iterate([&](double p) { return std::exp(-lh / p); });
  const double ps = bisect([&](double p) { return p - std::exp(-lh / p); }, 1e-6, 0.3);
  CHECK(r.p_large == doctest::Approx(pl).epsilon(1e-11));
  CHECK(r.p_small == doctest::Approx(ps).epsilon(1e-11));
  CHECK(r.p_large == doctest::Approx(0.7716).epsilon(1e-4));
  CHECK(r.p_small == doctest::Approx(0.0786).epsilon(2e-3));
}

TEST_CASE("roots satisfy their fixed-point maps") {
  struct Case { Family f; HoldingTimes h; };
  for (Case c : {Case{Family::Aloha, kAlohaFree}, Case{Family::Aloha, {4.0, 0.0}},
                 Case{Family::Csma, kCsma10}, Case{Family::Csma, {16.0, 4.0}},
                 Case{Family::Csma, {12.0, 12.0}}}) {
    const double lmax = max_throughput(c.f, c.h);
    for (double frac : {1e-4, 0.01, 0.2, 0.5, 0.9, 0.999}) {
      const double lh = frac * lmax;
      const RootPair r = unsaturated_roots(c.f, c.h, lh);
      CHECK(r.p_small <= r.p_large);
      CHECK(std::abs(unsaturated_map(c.f, c.h, lh, r.p_large) - r.p_large) <= 1e-10);
      CHECK(std::abs(unsaturated_map(c.f, c.h, lh, r.p_small) - r.p_small) <= 1e-10);
    }
  }
}

TEST_CASE("CSMA roots just below saturation") {
  const RootPair r = unsaturated_roots(Family::Csma, kCsma10, 0.062);
  CHECK(r.p_small < r.p_large);
  CHECK(max_throughput(Family::Csma, kCsma10) > 0.062);
}

TEST_CASE("no roots at or above the maximum throughput") {
  const double lmax = max_throughput(Family::Aloha, kAlohaFree);
  CHECK_THROWS_AS(unsaturated_roots(Family::Aloha, kAlohaFree, lmax), NoRootsError);
  try {
    unsaturated_roots(Family::Csma, kCsma10, 0.07);
    FAIL("expected NoRootsError");
  } catch (const NoRootsError& e) {
    CHECK(e.code() == ErrorCode::NoRoots);
    CHECK(e.lambda_hat_max() == doctest::Approx(max_throughput(Family::Csma, kCsma10)));
  }
  const RootPair zero = unsaturated_roots(Family::Aloha, kAlohaFree, 0.0);
  CHECK(zero.p_large == 1.0);
  CHECK(zero.p_small == 0.0);
  CHECK(unsaturated_roots(Family::Aloha, kAlohaFree, 1e-9).p_large == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("attracting and repelling roots") {
  for (Family f : {Family::Aloha, Family::Csma}) {
    const HoldingTimes h = f == Family::Aloha ? kAlohaFree : kCsma10;
    const double lmax = max_throughput(f, h);
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double lh = frac * lmax;
      const RootPair r = unsaturated_roots(f, h, lh);
      double p = 1.0;
      int it = 0;
      for (; it < 500; ++it) {
        const double next = unsaturated_map(f, h, lh, p);
        if (std::abs(next - p) < 1e-10) break;
        p = next;
      }
      CHECK(it < 500);
      CHECK(p == doctest::Approx(r.p_large).epsilon(1e-8));

      for (double start : {r.p_small - 1e-3, r.p_small + 1e-3}) {
        if (start <= 0.0) continue;
        double q = start;
        for (int i = 0; i < 20; ++i) q = unsaturated_map(f, h, lh, q);
        CHECK(std::abs(q - r.p_small) > 1e-3);
      }
    }
  }
}

TEST_CASE("root gap closes at the boundary") {
  // The roots meet at a square-root branch point, so the gap shrinks like
  // sqrt(1 - lambda_hat / lambda_hat_max).
  for (Family f : {Family::Aloha, Family::Csma}) {
    const HoldingTimes h = f == Family::Aloha ? kAlohaFree : kCsma10;
    const double lmax = max_throughput(f, h);
    double prev = 1.0;
    for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const RootPair r = unsaturated_roots(f, h, (1.0 - d) * lmax);
      const double gap = r.p_large - r.p_small;
      CHECK(gap > 0.0);
      CHECK(gap < prev);
      CHECK(gap < 1.5 * std::sqrt(d));
      prev = gap;
    }
    const RootPair r = unsaturated_roots(f, h, (1.0 - 1e-7) * lmax);
    CHECK(r.p_large - r.p_small < 1e-3);
  }
}

TEST_CASE("saturated root") {
  const auto cb = BackoffPolicy::constant(0);
  CHECK(saturated_root(50, 0.02, cb) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(saturated_root(50, 0.01, cb) == doctest::Approx(0.6065).epsilon(1e-4));

  const auto beb = BackoffPolicy::binary_exponential(2);
  const double oracle = bisect([&](double p) { return p - std::exp(-50 * 0.05 / f_terms(p, beb)); }, 1e-12, 1.0);
  CHECK(saturated_root(50, 0.05, beb) == doctest::Approx(oracle).epsilon(1e-11));

  for (int K : {0, 1, 3, 6}) {
    for (double q0 : {1e-4, 0.01, 0.1, 0.5, 1.0}) {
      const auto b = BackoffPolicy::binary_exponential(K);
      const double p = saturated_root(50, q0, b);
      CHECK(std::abs(p - saturated_map(50, q0, b, p)) <= 1e-10);
      const double pe = saturated_root(50, q0, b, FixedPointForm::ExactFiniteN);
      CHECK(std::abs(pe - saturated_map(50, q0, b, pe, FixedPointForm::ExactFiniteN)) <= 1e-10);
    }
  }
  CHECK(saturated_root(2, 1.0, cb, FixedPointForm::ExactFiniteN) == 0.0);
}

TEST_CASE("unsaturated region") {
  const auto cb = BackoffPolicy::constant(0);
  const UnsaturatedRegion r = unsaturated_region(Family::Aloha, kAlohaFree, 50, 0.2, cb);
  REQUIRE_FALSE(r.empty);
  CHECK(r.q0_lower == doctest::Approx(0.00519).epsilon(2e-3));
  CHECK(r.q0_upper == doctest::Approx(0.0509).epsilon(2e-3));
  const RootPair roots = unsaturated_roots(Family::Aloha, kAlohaFree, 0.2);
  CHECK(r.q0_lower == doctest::Approx(-std::log(roots.p_large) / 50).epsilon(1e-14));
  CHECK(r.q0_upper == doctest::Approx(-std::log(roots.p_small) / 50).epsilon(1e-14));

  CHECK(unsaturated_region(Family::Aloha, kAlohaFree, 50, 0.4, cb).empty);
  CHECK(unsaturated_region(Family::Csma, kCsma10, 50, 0.0625, cb).empty);

  const UnsaturatedRegion tiny = unsaturated_region(Family::Aloha, kAlohaFree, 5, 1e-4, cb);
  CHECK(tiny.upper_clamped);
  CHECK(tiny.q0_upper == 1.0);

  const UnsaturatedRegion idle = unsaturated_region(Family::Aloha, kAlohaFree, 50, 0.0, cb);
  CHECK_FALSE(idle.empty);
  CHECK(idle.contains(1.0));
}

TEST_CASE("region consistency with the saturated root") {
  for (Family f : {Family::Aloha, Family::Csma}) {
    const HoldingTimes h = f == Family::Aloha ? kAlohaFree : kCsma10;
    for (int K : {0, 2, 4}) {
      const auto b = BackoffPolicy::binary_exponential(K);
      for (double frac : {0.2, 0.5, 0.8}) {
        const double lh = frac * max_throughput(f, h);
        const UnsaturatedRegion reg = unsaturated_region(f, h, 50, lh, b);
        const RootPair roots = unsaturated_roots(f, h, lh);
        REQUIRE_FALSE(reg.empty);
        for (int i = 1; i < 10; ++i) {
          const double q0 = reg.q0_lower + (reg.q0_upper - reg.q0_lower) * i / 10.0;
          const double pa = saturated_root(50, q0, b);
          CHECK(pa > roots.p_small);
          CHECK(pa < roots.p_large);
        }
      }
    }
  }
}

TEST_CASE("finite-n roots") {
  for (Family f : {Family::Aloha, Family::Csma}) {
    const HoldingTimes h = f == Family::Aloha ? HoldingTimes{4.0, 0.0} : HoldingTimes{16.0, 4.0};
    const double lh = 0.5 * max_throughput(f, h);
    const RootPair big = unsaturated_roots(f, h, lh);
    double prev_gap = 1.0;
    for (int n : {10, 50, 500, 50000}) {
      const RootPair r = unsaturated_roots(f, h, lh, FixedPointForm::ExactFiniteN, n);
      CHECK(std::abs(unsaturated_map(f, h, lh, r.p_large, FixedPointForm::ExactFiniteN, n) - r.p_large) <= 1e-10);
      CHECK(std::abs(unsaturated_map(f, h, lh, r.p_small, FixedPointForm::ExactFiniteN, n) - r.p_small) <= 1e-10);
      const double gap = std::abs(r.p_large - big.p_large);
      CHECK(gap < prev_gap);
      prev_gap = gap;
    }
    CHECK(prev_gap < 1e-4);
  }
  CHECK_THROWS_AS(unsaturated_roots(Family::Aloha, kAlohaFree, 0.42, FixedPointForm::ExactFiniteN, 5), NoRootsError);
  // (1 - 1/n)^{n-1} is the finite-n maximum for connection-free Aloha.
  CHECK_NOTHROW(unsaturated_roots(Family::Aloha, kAlohaFree, 0.40, FixedPointForm::ExactFiniteN, 5));
  const auto cb = BackoffPolicy::constant(0);
  const UnsaturatedRegion r = unsaturated_region(Family::Aloha, kAlohaFree, 50, 0.2, cb, FixedPointForm::ExactFiniteN);
  CHECK_FALSE(r.empty);
  CHECK(r.q0_lower < r.q0_upper);
}

TEST_CASE("maximum bit throughput") {
  AccessScheme s;
  s.family = Family::Aloha;
  s.payload_ms = 0.5;
  s.overhead_success_ms = s.overhead_fail_ms = 5.5;
  CHECK(max_bit_throughput(s, 0.3066) == doctest::Approx(0.3066 * 0.5 / 6.0 / kE));
}
