#pragma once

#include "sensedelay/model.hpp"

namespace sensedelay {

/// Which version of the steady-state equations to solve. LargeN uses the
/// (1-x)^n ~ e^{-nx} forms that admit Lambert-W roots; ExactFiniteN keeps the
/// finite-n expressions and solves them numerically.
enum class FixedPointForm { LargeN, ExactFiniteN };

struct SolverOptions {
  FixedPointForm form = FixedPointForm::LargeN;
  double epsilon = 1e-6;      // gap below the region upper bound for q0*
  bool verify_monotone = true;
  int monotone_grid = 50;
};

/// The two roots of the unsaturated fixed point. p_large attracts under
/// direct iteration, p_small repels.
struct RootPair {
  double p_large = 1.0;
  double p_small = 0.0;
};

/// Open interval (q0_lower, q0_upper) of initial transmission probabilities
/// that keep every queue unsaturated.
struct UnsaturatedRegion {
  double q0_lower = 0.0;
  double q0_upper = 0.0;
  double q0_upper_raw = 0.0;  // before clamping to 1
  bool empty = true;
  bool upper_clamped = false;

  bool contains(double q0) const { return !empty && q0 > q0_lower && q0 < q0_upper_raw; }
};

/// f(p) = (1-p)^K / Q(K) + sum_{k<K} p (1-p)^k / Q(k), by direct summation.
double f_of_p(double p, const BackoffPolicy& backoff);

/// Maximum aggregate data throughput in packets per slot.
double max_throughput(Family family, const HoldingTimes& h);
double max_throughput(const AccessScheme& scheme);
/// Same bound in bit/s/Hz: R L / sigma * max_throughput.
double max_bit_throughput(const AccessScheme& scheme, double encoding_rate);

/// Throws NoRootsError when lambda_hat >= max_throughput. n is only used by
/// the finite-n form. lambda_hat == 0 yields {1, 0}.
RootPair unsaturated_roots(Family family, const HoldingTimes& h, double lambda_hat,
                           FixedPointForm form = FixedPointForm::LargeN, int n = 0);

/// Unique root in (0,1] of p = exp(-n q0 / f(p)) (or its finite-n form).
double saturated_root(int n, double q0, const BackoffPolicy& backoff,
                      FixedPointForm form = FixedPointForm::LargeN);

/// The q0 at which the saturated root equals p: -ln(p) f(p) / n (large n) or
/// f(p) (1 - p^{1/(n-1)}) (finite n).
double region_bound(double p, int n, const BackoffPolicy& backoff,
                    FixedPointForm form = FixedPointForm::LargeN);

UnsaturatedRegion unsaturated_region(Family family, const HoldingTimes& h, int n,
                                     double lambda_hat, const BackoffPolicy& backoff,
                                     FixedPointForm form = FixedPointForm::LargeN);

/// Right-hand sides of the fixed-point maps, p -> map(p). Exposed for the
/// residual and stability checks.
double unsaturated_map(Family family, const HoldingTimes& h, double lambda_hat, double p,
                       FixedPointForm form = FixedPointForm::LargeN, int n = 0);
double saturated_map(int n, double q0, const BackoffPolicy& backoff, double p,
                     FixedPointForm form = FixedPointForm::LargeN);

}  // namespace sensedelay
