#include "sensedelay/steady_state.hpp"

#include <cmath>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {

double p_log_p(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

const char* to_string(Regime r) { return r == Regime::Unsaturated ? "unsaturated" : "saturated"; }

double alpha_unconditional(Family family, const HoldingTimes& h, double p, FixedPointForm form,
                           int n) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "p must lie in [0,1]");
  if (form == FixedPointForm::ExactFiniteN) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "finite-n alpha needs n >= 2");
    const double root = std::pow(p, 1.0 / (n - 1.0));
    if (family == Family::Aloha) return 1.0 / (1.0 + n * p * (1.0 - root) * (h.tau_t - 1.0));
    return 1.0 / (1.0 + h.tau_f * (1.0 - p * root) + n * p * (h.tau_t - h.tau_f) * (1.0 - root));
  }
  if (family == Family::Aloha) return 1.0 / (1.0 - (h.tau_t - 1.0) * p_log_p(p));
  return 1.0 / (1.0 + h.tau_f * (1.0 - p) - (h.tau_t - h.tau_f) * p_log_p(p));
}

double excess_holding(Family family, const HoldingTimes& h, double p) {
  if (family == Family::Aloha) return h.tau_t - 1.0;
  return h.tau_t + h.tau_f * (1.0 - p) / p;
}

double alpha_tilde(Family family, const HoldingTimes& h, double p, double lambda, double q0,
                   const BackoffPolicy& backoff, Regime regime, FixedPointForm form, int n) {
  const double alpha = alpha_unconditional(family, h, p, form, n);
  const double e = excess_holding(family, h, p);
  if (regime == Regime::Unsaturated) {
    const double d = 1.0 - lambda * e;
    if (!(d > 0.0))
      throw Error(ErrorCode::InconsistentRegime,
                  "unsaturated branch of alpha_tilde requires lambda * E < 1");
    return alpha / d;
  }
  const double d = 1.0 / alpha - e * p * q0 / f_of_p(p, backoff);
  if (!(d > 0.0))
    throw Error(ErrorCode::InconsistentRegime, "saturated branch of alpha_tilde is not positive");
  return 1.0 / d;
}

double service_rate(Family family, const HoldingTimes& h, double p, double alpha_tilde,
                    double q0, const BackoffPolicy& backoff) {
  if (p <= 0.0) return 0.0;
  return 1.0 / (excess_holding(family, h, p) + f_of_p(p, backoff) / (p * alpha_tilde * q0));
}

SteadyState solve_steady_state(const Scenario& sc, FixedPointForm form) {
  validate(sc);
  const Family fam = sc.scheme.family;
  SteadyState st;
  st.holding = holding_times(sc.scheme);
  st.lambda = sc.packet_rate();
  st.lambda_hat = sc.n * st.lambda;
  st.p_a = saturated_root(sc.n, sc.q0, sc.backoff, form);
  st.region = unsaturated_region(fam, st.holding, sc.n, st.lambda_hat, sc.backoff, form);
  try {
    st.roots = unsaturated_roots(fam, st.holding, st.lambda_hat, form, sc.n);
    st.has_roots = true;
  } catch (const NoRootsError&) {
    st.has_roots = false;
  }

  if (st.region.contains(sc.q0)) {
    const double p = st.roots.p_large;
    const double at = alpha_tilde(fam, st.holding, p, st.lambda, sc.q0, sc.backoff,
                                  Regime::Unsaturated, form, sc.n);
    const double mu = service_rate(fam, st.holding, p, at, sc.q0, sc.backoff);
    if (st.lambda < mu) {
      st.regime = Regime::Unsaturated;
      st.p = p;
      st.alpha = alpha_unconditional(fam, st.holding, p, form, sc.n);
      st.alpha_tilde = at;
      st.mu = mu;
      st.rho = st.lambda / mu;
      st.omega = st.lambda / (p * st.alpha);
      return st;
    }
  }

  st.regime = Regime::Saturated;
  st.p = st.p_a;
  st.alpha = alpha_unconditional(fam, st.holding, st.p, form, sc.n);
  st.alpha_tilde = alpha_tilde(fam, st.holding, st.p, st.lambda, sc.q0, sc.backoff,
                               Regime::Saturated, form, sc.n);
  st.mu = st.p > 0.0 ? st.p * st.alpha * sc.q0 / f_of_p(st.p, sc.backoff) : 0.0;
  st.rho = 1.0;
  st.omega = st.p > 0.0 ? st.mu / (st.p * st.alpha) : 0.0;
  return st;
}

}  // namespace sensedelay
