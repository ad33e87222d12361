#pragma once

#include <string>
#include <vector>

#include "sensedelay/delay.hpp"

namespace sensedelay {

/// Largest sensing slot at which CSMA's maximum bit throughput still matches
/// Aloha's, in ms. Rate independent.
double throughput_optimal_bound(Connection connection, double payload_ms,
                                double overhead_success_ms, double overhead_fail_ms);
double throughput_optimal_bound(const AccessScheme& scheme);

struct SensingSearchConfig {
  double floor_ms = 1e-4;
  double ceiling_ms = 0.0;  // <= 0 means L + Delta_F
  double tol_ms = 1e-4;
  int prescan = 32;
  SolverOptions solver;
};

struct SensingBoundResult {
  double sigma_star_throughput_ms = 0.0;
  double sigma_star_delay_ms = 0.0;  // +inf when undefined
  double lambda_tilde = 0.0;
  double t_min_aloha_ms = 0.0;
  double t_min_csma_ms = 0.0;  // at sigma_star_delay_ms
  bool non_monotone = false;
  bool clipped_at_ceiling = false;
  bool below_floor = false;
  std::vector<std::string> warnings;
};

/// Schemes used on either side of the comparison: the base timing with the
/// family switched. The CSMA scheme takes `sigma_ms` as its sensing slot.
AccessScheme aloha_counterpart(const AccessScheme& base);
AccessScheme csma_counterpart(const AccessScheme& base, double sigma_ms);

/// Minimum mean delay in ms for `family` at aggregate bit rate lambda_tilde;
/// +inf when no q0 keeps the queues unsaturated.
double min_delay_ms(const Scenario& s, double lambda_tilde, const SolverOptions& opt = {});

/// Largest sensing slot for which optimised CSMA delay does not exceed
/// optimised Aloha delay at the same aggregate bit rate. Throws
/// SaturatedError(AlohaSaturated) when Aloha cannot carry lambda_tilde.
SensingBoundResult delay_optimal_bound(const Scenario& base, double lambda_tilde,
                                       const SensingSearchConfig& cfg = {});

/// `count` log-spaced aggregate bit rates from 1e-4 to just below Aloha's
/// maximum bit throughput.
std::vector<double> lambda_tilde_grid(const Scenario& base, int count = 40);

}  // namespace sensedelay
