#pragma once

#include <vector>

#include "sensedelay/steady_state.hpp"

namespace sensedelay {

enum class StateKind { T, B, R, F };

struct RenewalState {
  StateKind kind = StateKind::T;
  int k = 0;
};

/// Holding-time law: Deterministic(value slots) or Geometric(success prob value).
struct Holding {
  enum class Kind { Deterministic, Geometric };
  Kind kind = Kind::Deterministic;
  double value = 1.0;

  double mean() const;
  /// E[Y(Y-1)], the second derivative of the PGF at z = 1.
  double second_factorial() const;
  double pgf(double z) const;
};

/// HOL-packet Markov renewal process. State 0 is always T.
struct MarkovRenewalModel {
  Family family = Family::Aloha;
  std::vector<RenewalState> states;
  std::vector<std::vector<double>> transition;
  std::vector<Holding> holding;
  std::vector<double> request_intent;  // phi_u
  std::vector<double> request_prob;    // q_u

  std::size_t size() const { return states.size(); }
  /// Stationary distribution of the embedded chain.
  std::vector<double> stationary() const;
  /// pi_u tau_u / sum_v pi_v tau_v.
  std::vector<double> limiting() const;
  double intent_sum() const;          // sum phi_u
  double intent_request_sum() const;  // sum phi_u q_u
  /// Largest |row sum - 1|.
  double row_sum_error() const;
};

struct ServiceMoments {
  double d1 = 0.0;  // mean service time, slots
  double d2 = 0.0;  // second moment, slots^2
};

/// Chain for the given p, alpha_tilde and q0. phi and q are filled from the
/// limiting distribution.
MarkovRenewalModel build_renewal_model(Family family, const HoldingTimes& h, double p,
                                       double alpha_tilde, double q0,
                                       const BackoffPolicy& backoff);
MarkovRenewalModel build_renewal_model(const Scenario& s, const SteadyState& st);

/// Embedded-chain stationary distribution from the closed-form displays, in
/// the same state order as build_renewal_model.
std::vector<double> closed_form_stationary(Family family, double p, double alpha_tilde,
                                           double q0, int cutoff);

/// Differentiates the service-time PGF recursion at z = 1 and solves the two
/// linear systems over the non-T states. Throws DivergentService if singular.
ServiceMoments service_moments_generic(const MarkovRenewalModel& m);

/// G_D(1) from the same recursion; equals 1 for a proper service time.
double service_pgf_at_one(const MarkovRenewalModel& m);

/// Explicit first and second derivative formulas of the service-time PGF.
ServiceMoments service_moments_closed_form(Family family, const HoldingTimes& h, double p,
                                           double alpha_tilde, double q0,
                                           const BackoffPolicy& backoff);
ServiceMoments service_moments_closed_form(const Scenario& s, const SteadyState& st);

}  // namespace sensedelay
