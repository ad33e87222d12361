#pragma once

#include <string>
#include <vector>

#include "sensedelay/renewal.hpp"
#include "sensedelay/steady_state.hpp"

namespace sensedelay {

struct DelayResult {
  double t_slots = 0.0;
  double t_ms = 0.0;
  bool finite = false;
  SteadyState steady;
  ServiceMoments moments;  // zero when not finite
};

/// T = (lambda D2 - lambda D) / (2 (1 - lambda D)) + D for lambda D < 1.
double queueing_delay_from_moments(double lambda, const ServiceMoments& m);

/// Mean queueing delay. Saturated scenarios return finite = false with both
/// fields set to +inf.
DelayResult mean_queueing_delay(const Scenario& s, FixedPointForm form = FixedPointForm::LargeN);

struct OptimalQ0 {
  double q0_star = 0.0;
  DelayResult delay;
  double q0_relaxed = 0.0;  // bound - 10 epsilon (or q0_star if that leaves the region)
  DelayResult delay_relaxed;
  UnsaturatedRegion region;
  bool midpoint_fallback = false;
  bool monotone = true;
  std::vector<std::string> warnings;
};

/// Minimizes the mean delay over q0: the region's upper bound minus epsilon,
/// clamped to 1. Throws SaturatedError when lambda_hat >= lambda_hat_max.
OptimalQ0 optimal_q0(const Scenario& s, const SolverOptions& opt = {});

}  // namespace sensedelay
