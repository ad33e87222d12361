#include "sensedelay/lambertw.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {

constexpr double kInvE = 1.0 / std::numbers::e;
constexpr double kBranchPointTol = 1e-12;
constexpr int kMaxIter = 50;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Series about the branch point in p = sqrt(2(e x + 1)); sign selects branch.
double branch_point_series(double x, double sign) {
  const double p = sign * std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * x + 1.0)));
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
}

double initial_guess(Branch b, double x) {
  if (x < -0.32) return branch_point_series(x, b == Branch::Principal ? 1.0 : -1.0);
  if (b == Branch::Principal) {
    if (x < 1e3) {
      // Winitzki's approximation, good to a few percent on (-0.32, 1e3).
      const double l = std::log1p(x);
      return l * (1.0 - std::log1p(l) / (2.0 + l));
    }
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
  }
  const double l1 = std::log(-x);
  const double l2 = std::log(-l1);
  return l1 - l2 + l2 / l1;
}

// Halley on w e^w - x. Returns NaN if it fails to converge.
double halley(double w, double x) {
  for (int i = 0; i < kMaxIter; ++i) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) return f == 0.0 ? w : std::numeric_limits<double>::quiet_NaN();
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4.0 * kEps * (1.0 + std::abs(w))) return w;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Newton on the log form w + ln|w| - ln|x| = 0, for |w| large where e^w
// would overflow or underflow.
double log_newton(double w, double x) {
  const double lx = std::log(std::abs(x));
  for (int i = 0; i < kMaxIter; ++i) {
    const double g = w + std::log(std::abs(w)) - lx;
    const double step = g / (1.0 + 1.0 / w);
    w -= step;
    if (std::abs(step) <= 2.0 * kEps * std::abs(w)) return w;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double bisect(Branch b, double x) {
  double lo, hi;
  if (b == Branch::Principal) {
    lo = -1.0;
    hi = x > std::numbers::e ? std::log(x) : 1.0;
  } else {
    lo = 2.0 * std::log(-x) - 1.0;
    hi = -1.0;
  }
  // g is increasing on the principal range and decreasing on the other.
  const double dir = b == Branch::Principal ? 1.0 : -1.0;
  for (int i = 0; i < 2000 && hi - lo > 2.0 * kEps * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = dir * (mid * std::exp(mid) - x);
    if (g < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double lambert_w(Branch branch, double x) {
  if (std::isnan(x)) throw Error(ErrorCode::Domain, "lambert_w: NaN argument");
  if (x < -kInvE - kBranchPointTol)
    throw Error(ErrorCode::Domain, "lambert_w: argument below -1/e: " + std::to_string(x));
  if (branch == Branch::Minus1 && x >= 0.0)
    throw Error(ErrorCode::Domain, "lambert_w: W_-1 requires x < 0, got " + std::to_string(x));
  if (std::abs(x + kInvE) <= kBranchPointTol) return -1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  const double guess = initial_guess(branch, x);
  const bool large = std::abs(guess) > 30.0;
  double w = large ? log_newton(guess, x) : halley(guess, x);
  if (!std::isfinite(w)) w = bisect(branch, x);
  if (branch == Branch::Principal) return std::max(w, -1.0);
  return std::min(w, -1.0);
}

}  // namespace sensedelay
