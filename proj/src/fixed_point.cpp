#include "sensedelay/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "sensedelay/error.hpp"
#include "sensedelay/lambertw.hpp"

namespace sensedelay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinLog = -745.0;  // exp underflows below this

void require_n(int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "finite-n fixed points need n >= 2");
}

// Bisection for an increasing function on [lo, hi] with g(lo) <= 0 <= g(hi).
template <class G>
double bisect_increasing(G&& g, double lo, double hi) {
  for (int i = 0; i < 400; ++i) {
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(lo))) break;
    const double mid = 0.5 * (lo + hi);
    if (g(mid) <= 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Coefficients of the finite-n unsaturated equation written as
// p^{1/(n-1)} = 1 + a - c / p.
struct FiniteNCoeffs {
  double a;
  double c;
  bool valid;
};

FiniteNCoeffs finite_n_coeffs(Family family, const HoldingTimes& h, double lambda_hat, int n) {
  const double lambda = lambda_hat / n;
  if (family == Family::Aloha) {
    const double d = 1.0 - lambda_hat * (h.tau_t - 1.0);
    return {0.0, lambda / d, d > 0.0};
  }
  const double d = 1.0 - lambda_hat * h.tau_t + lambda * h.tau_f * (n - 1);
  return {lambda * h.tau_f / d, lambda * (h.tau_f + 1.0) / d, d > 0.0};
}

RootPair finite_n_roots(Family family, const HoldingTimes& h, double lambda_hat, int n) {
  require_n(n);
  const auto [a, c, valid] = finite_n_coeffs(family, h, lambda_hat, n);
  const double m = n - 1.0;
  const double lmax = max_throughput(family, h);
  if (!valid) throw NoRootsError(lambda_hat, lmax);
  // phi(p) = p^{1/m} + c/p - (1+a) is convex on (0,1] and positive at both
  // ends, so roots exist iff its minimum is negative.
  auto phi_log = [&](double u) {
    const double p = std::exp(u);
    return std::exp(u / m) + c / p - (1.0 + a);
  };
  const double p_star = std::pow(m * c, m / (m + 1.0));
  if (p_star >= 1.0 || phi_log(std::log(p_star)) >= 0.0) throw NoRootsError(lambda_hat, lmax);
  const double u_star = std::log(p_star);
  const double u_lo = std::log(c / (1.0 + a));
  // phi decreasing on the left of p*, increasing on the right.
  const double u_small = bisect_increasing([&](double u) { return -phi_log(u); }, u_lo, u_star);
  const double u_large = bisect_increasing(phi_log, u_star, 0.0);
  return {std::exp(u_large), std::exp(u_small)};
}

}  // namespace

double f_of_p(double p, const BackoffPolicy& backoff) {
  const int K = backoff.cutoff();
  double sum = 0.0;
  double tail = 1.0;  // (1-p)^k
  for (int k = 0; k < K; ++k) {
    sum += p * tail / backoff.q(k);
    tail *= 1.0 - p;
  }
  return sum + tail / backoff.q(K);
}

double max_throughput(Family family, const HoldingTimes& h) {
  constexpr double e = std::numbers::e;
  if (family == Family::Aloha) return 1.0 / (h.tau_t - 1.0 + e);
  if (h.tau_f < 1e-12) return 1.0 / (e + h.tau_t);
  const double w = lambert_w(Branch::Principal, -h.tau_f / (e * (h.tau_f + 1.0)));
  return -w / (h.tau_f - (h.tau_t - h.tau_f) * w);
}

double max_throughput(const AccessScheme& scheme) {
  return max_throughput(scheme.family, holding_times(scheme));
}

double max_bit_throughput(const AccessScheme& scheme, double encoding_rate) {
  const AccessScheme s = derive_slot(scheme);
  return encoding_rate * s.payload_ms / s.slot_ms * max_throughput(s);
}

double unsaturated_map(Family family, const HoldingTimes& h, double lambda_hat, double p,
                       FixedPointForm form, int n) {
  if (form == FixedPointForm::ExactFiniteN) {
    require_n(n);
    const auto [a, c, valid] = finite_n_coeffs(family, h, lambda_hat, n);
    const double base = std::max(0.0, 1.0 + a - c / p);
    return std::pow(base, n - 1.0);
  }
  if (family == Family::Aloha) {
    const double d = 1.0 - lambda_hat * (h.tau_t - 1.0);
    return std::exp(-lambda_hat / (p * d));
  }
  const double d = 1.0 - lambda_hat * (h.tau_t - h.tau_f);
  return std::exp(lambda_hat * h.tau_f / d - lambda_hat * (h.tau_f + 1.0) / (p * d));
}

RootPair unsaturated_roots(Family family, const HoldingTimes& h, double lambda_hat,
                           FixedPointForm form, int n) {
  if (!(lambda_hat >= 0.0) || !std::isfinite(lambda_hat))
    throw Error(ErrorCode::InvalidArgument, "aggregate packet rate must be finite and >= 0");
  if (lambda_hat == 0.0) return {1.0, 0.0};
  if (form == FixedPointForm::ExactFiniteN) return finite_n_roots(family, h, lambda_hat, n);
  const double lmax = max_throughput(family, h);
  if (lambda_hat >= lmax) throw NoRootsError(lambda_hat, lmax);

  constexpr double inv_e = 1.0 / std::numbers::e;
  if (family == Family::Aloha) {
    const double d = 1.0 - lambda_hat * (h.tau_t - 1.0);
    const double c = lambda_hat / d;
    if (d <= 0.0 || c >= inv_e) throw NoRootsError(lambda_hat, lmax);
    return {std::exp(lambert_w(Branch::Principal, -c)), std::exp(lambert_w(Branch::Minus1, -c))};
  }
  const double d = 1.0 - lambda_hat * (h.tau_t - h.tau_f);
  if (d <= 0.0) throw NoRootsError(lambda_hat, lmax);
  const double a = lambda_hat * h.tau_f / d;
  const double b = lambda_hat * (h.tau_f + 1.0) / d;
  const double x = -b * std::exp(-a);
  if (-x >= inv_e) throw NoRootsError(lambda_hat, lmax);
  return {std::exp(lambert_w(Branch::Principal, x) + a),
          std::exp(lambert_w(Branch::Minus1, x) + a)};
}

double saturated_map(int n, double q0, const BackoffPolicy& backoff, double p,
                     FixedPointForm form) {
  const double f = f_of_p(p, backoff);
  if (form == FixedPointForm::ExactFiniteN)
    return std::pow(std::max(0.0, 1.0 - q0 / f), n - 1.0);
  return std::exp(-n * q0 / f);
}

double saturated_root(int n, double q0, const BackoffPolicy& backoff, FixedPointForm form) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(q0 > 0.0 && q0 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "q0 must lie in (0,1]");
  const double qk = backoff.q(backoff.cutoff());
  // Since 1 <= f(p) <= 1/Q(K), ln p is bracketed by the images of those bounds.
  double lo, hi;
  std::function<double(double)> log_map;
  if (form == FixedPointForm::ExactFiniteN) {
    require_n(n);
    lo = (n - 1.0) * std::log1p(-q0);
    hi = (n - 1.0) * std::log1p(-q0 * qk);
    log_map = [&](double u) {
      return (n - 1.0) * std::log1p(-q0 / f_of_p(std::exp(u), backoff));
    };
  } else {
    lo = -n * q0;
    hi = -n * q0 * qk;
    log_map = [&](double u) { return -n * q0 / f_of_p(std::exp(u), backoff); };
  }
  if (hi < kMinLog) return 0.0;
  lo = std::max(lo, kMinLog);
  const double u = bisect_increasing([&](double v) { return v - log_map(v); }, lo, hi);
  return std::exp(u);
}

double region_bound(double p, int n, const BackoffPolicy& backoff, FixedPointForm form) {
  if (form == FixedPointForm::ExactFiniteN) {
    require_n(n);
    return f_of_p(p, backoff) * (1.0 - std::pow(p, 1.0 / (n - 1.0)));
  }
  if (p <= 0.0) return kInf;
  return -std::log(p) * f_of_p(p, backoff) / n;
}

UnsaturatedRegion unsaturated_region(Family family, const HoldingTimes& h, int n,
                                     double lambda_hat, const BackoffPolicy& backoff,
                                     FixedPointForm form) {
  UnsaturatedRegion r;
  RootPair roots;
  try {
    roots = unsaturated_roots(family, h, lambda_hat, form, n);
  } catch (const NoRootsError&) {
    return r;
  }
  r.q0_lower = region_bound(roots.p_large, n, backoff, form);
  r.q0_upper_raw = region_bound(roots.p_small, n, backoff, form);
  r.q0_upper = std::min(r.q0_upper_raw, 1.0);
  r.upper_clamped = r.q0_upper_raw > 1.0;
  r.empty = !(r.q0_lower < 1.0 && r.q0_lower < r.q0_upper_raw);
  return r;
}

}  // namespace sensedelay
