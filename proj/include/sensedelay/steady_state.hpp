#pragma once

#include "sensedelay/fixed_point.hpp"
#include "sensedelay/model.hpp"

namespace sensedelay {

enum class Regime { Unsaturated, Saturated };

const char* to_string(Regime r);

struct SteadyState {
  double p = 1.0;
  double alpha = 1.0;
  double alpha_tilde = 1.0;
  double mu = 0.0;
  double rho = 0.0;
  double omega = 0.0;
  Regime regime = Regime::Unsaturated;

  // Inputs and intermediate results kept for reporting.
  double lambda = 0.0;
  double lambda_hat = 0.0;
  HoldingTimes holding;
  UnsaturatedRegion region;
  bool has_roots = false;
  RootPair roots;
  double p_a = 1.0;  // saturated-mode root, always computed

  double mu_hat(int n) const { return n * mu; }
};

/// Unconditional channel-accessible probability alpha. p -> 0 uses the limit
/// p ln p -> 0.
double alpha_unconditional(Family family, const HoldingTimes& h, double p,
                           FixedPointForm form = FixedPointForm::LargeN, int n = 0);

/// Mean number of slots per HOL attempt cycle that are not accessible-slot
/// waiting: tau_T - 1 (Aloha) or tau_T + tau_F (1-p)/p (CSMA).
double excess_holding(Family family, const HoldingTimes& h, double p);

/// Conditional accessibility given request intent. Throws InconsistentRegime
/// when the requested branch has no valid value for these inputs.
double alpha_tilde(Family family, const HoldingTimes& h, double p, double lambda, double q0,
                   const BackoffPolicy& backoff, Regime regime,
                   FixedPointForm form = FixedPointForm::LargeN, int n = 0);

/// mu = 1 / (E + f(p) / (p alpha_tilde q0)).
double service_rate(Family family, const HoldingTimes& h, double p, double alpha_tilde,
                    double q0, const BackoffPolicy& backoff);

SteadyState solve_steady_state(const Scenario& s, FixedPointForm form = FixedPointForm::LargeN);

}  // namespace sensedelay
