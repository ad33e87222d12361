#include "sensedelay/renewal.hpp"

#include <cmath>
#include <numeric>

#include "linalg.hpp"
#include "sensedelay/error.hpp"

namespace sensedelay {

using detail::Matrix;
using detail::solve_dense;

double Holding::mean() const { return kind == Kind::Deterministic ? value : 1.0 / value; }

double Holding::second_factorial() const {
  if (kind == Kind::Deterministic) return value * (value - 1.0);
  return 2.0 * (1.0 - value) / (value * value);
}

double Holding::pgf(double z) const {
  if (kind == Kind::Deterministic) return std::pow(z, value);
  return value * z / (1.0 - (1.0 - value) * z);
}

std::vector<double> MarkovRenewalModel::stationary() const {
  const std::size_t n = size();
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[j][i] = (i == j ? 1.0 : 0.0) - transition[i][j];
  std::vector<double> b(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  b[n - 1] = 1.0;
  auto x = solve_dense(std::move(a), std::move(b));
  if (!x) throw Error(ErrorCode::DivergentService, "embedded chain has no unique stationary law");
  return *x;
}

std::vector<double> MarkovRenewalModel::limiting() const {
  std::vector<double> pi = stationary();
  double total = 0.0;
  for (std::size_t u = 0; u < size(); ++u) {
    pi[u] *= holding[u].mean();
    total += pi[u];
  }
  for (double& v : pi) v /= total;
  return pi;
}

double MarkovRenewalModel::intent_sum() const {
  return std::accumulate(request_intent.begin(), request_intent.end(), 0.0);
}

double MarkovRenewalModel::intent_request_sum() const {
  double s = 0.0;
  for (std::size_t u = 0; u < size(); ++u) s += request_intent[u] * request_prob[u];
  return s;
}

double MarkovRenewalModel::row_sum_error() const {
  double worst = 0.0;
  for (const auto& row : transition)
    worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
  return worst;
}

MarkovRenewalModel build_renewal_model(Family family, const HoldingTimes& h, double p,
                                       double alpha_tilde, double q0,
                                       const BackoffPolicy& backoff) {
  const int K = backoff.cutoff();
  const double a = alpha_tilde * q0;
  MarkovRenewalModel m;
  m.family = family;
  auto geometric = [&](int k) { return Holding{Holding::Kind::Geometric, a * backoff.q(k)}; };

  if (family == Family::Aloha) {
    const std::size_t n = K + 2;
    auto B = [](int k) { return 1 + k; };
    m.transition.assign(n, std::vector<double>(n, 0.0));
    m.states.push_back({StateKind::T, 0});
    m.holding.push_back({Holding::Kind::Deterministic, h.tau_t});
    for (int k = 0; k <= K; ++k) {
      m.states.push_back({StateKind::B, k});
      m.holding.push_back(geometric(k));
    }
    m.transition[0][0] = a * p;
    m.transition[0][B(0)] += 1.0 - a;
    m.transition[0][B(std::min(1, K))] += a * (1.0 - p);
    for (int k = 0; k <= K; ++k) {
      m.transition[B(k)][0] = p;
      m.transition[B(k)][B(std::min(k + 1, K))] += 1.0 - p;
    }
  } else {
    const std::size_t n = 2 * K + 3;
    auto R = [](int k) { return 1 + k; };
    auto F = [K](int k) { return K + 2 + k; };
    m.transition.assign(n, std::vector<double>(n, 0.0));
    m.states.push_back({StateKind::T, 0});
    m.holding.push_back({Holding::Kind::Deterministic, h.tau_t});
    for (int k = 0; k <= K; ++k) {
      m.states.push_back({StateKind::R, k});
      m.holding.push_back(geometric(k));
    }
    for (int k = 0; k <= K; ++k) {
      m.states.push_back({StateKind::F, k});
      m.holding.push_back({Holding::Kind::Deterministic, h.tau_f});
    }
    m.transition[0][R(0)] = 1.0;
    for (int k = 0; k <= K; ++k) {
      m.transition[R(k)][0] = p;
      m.transition[R(k)][F(k)] = 1.0 - p;
      m.transition[F(k)][R(std::min(k + 1, K))] = 1.0;
    }
  }

  const std::size_t n = m.size();
  m.request_intent.assign(n, 0.0);
  m.request_prob.assign(n, 0.0);
  std::vector<double> lim;
  try {
    lim = m.limiting();
  } catch (const Error&) {
    return m;  // intent stays zero; moments will report the divergence
  }
  for (std::size_t u = 0; u < n; ++u) {
    const RenewalState& s = m.states[u];
    switch (s.kind) {
      case StateKind::T:
        if (family == Family::Aloha) {
          m.request_intent[u] = lim[u] / h.tau_t;
          m.request_prob[u] = q0;
        }
        break;
      case StateKind::B:
      case StateKind::R:
        m.request_intent[u] = lim[u];
        m.request_prob[u] = q0 * backoff.q(s.k);
        break;
      case StateKind::F:
        break;
    }
  }
  return m;
}

MarkovRenewalModel build_renewal_model(const Scenario& s, const SteadyState& st) {
  return build_renewal_model(s.scheme.family, st.holding, st.p, st.alpha_tilde, s.q0, s.backoff);
}

std::vector<double> closed_form_stationary(Family family, double p, double alpha_tilde,
                                           double q0, int K) {
  const double a = alpha_tilde * q0;
  std::vector<double> pi;
  if (family == Family::Aloha) {
    const double pt = p / (p * (1.0 - a) + 1.0);
    pi.push_back(pt);
    for (int k = 0; k <= K; ++k) {
      if (K == 0) pi.push_back((1.0 - a * p) / p * pt);  // B0 also absorbs failures
      else if (k == 0) pi.push_back((1.0 - a) * pt);
      else if (k < K) pi.push_back(std::pow(1.0 - p, k) * pt);
      else pi.push_back(std::pow(1.0 - p, K) / p * pt);
    }
    return pi;
  }
  const double pt = p / 2.0;
  pi.push_back(pt);
  for (int k = 0; k <= K; ++k)
    pi.push_back(k < K ? std::pow(1.0 - p, k) * pt : std::pow(1.0 - p, K) / p * pt);
  for (int k = 0; k <= K; ++k)
    pi.push_back(k < K ? std::pow(1.0 - p, k + 1) * pt : std::pow(1.0 - p, K + 1) / p * pt);
  return pi;
}

namespace {

struct Reduced {
  Matrix a;  // I - P restricted to the non-T states
  std::vector<double> to_t;
};

Reduced reduce(const MarkovRenewalModel& m) {
  const std::size_t n = m.size() - 1;
  Reduced r{Matrix(n, std::vector<double>(n, 0.0)), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      r.a[i][j] = (i == j ? 1.0 : 0.0) - m.transition[i + 1][j + 1];
    r.to_t[i] = m.transition[i + 1][0];
  }
  return r;
}

std::vector<double> solve_or_diverge(const Matrix& a, std::vector<double> b) {
  for (double v : b)
    if (!std::isfinite(v))
      throw Error(ErrorCode::DivergentService, "holding time has no finite moments");
  auto x = solve_dense(a, std::move(b));
  if (!x) throw Error(ErrorCode::DivergentService, "service-time recursion is singular");
  return *x;
}

}  // namespace

double service_pgf_at_one(const MarkovRenewalModel& m) {
  const Reduced r = reduce(m);
  const std::vector<double> g = solve_or_diverge(r.a, r.to_t);
  double total = m.transition[0][0];
  for (std::size_t u = 1; u < m.size(); ++u) total += m.transition[0][u] * g[u - 1];
  return total;
}

ServiceMoments service_moments_generic(const MarkovRenewalModel& m) {
  const std::size_t n = m.size();
  const double tau_t = m.holding[0].mean();
  const double s_t = m.holding[0].second_factorial();
  const Reduced r = reduce(m);

  std::vector<double> b1(n - 1);
  for (std::size_t i = 0; i < n - 1; ++i) b1[i] = m.holding[i + 1].mean() + r.to_t[i] * tau_t;
  const std::vector<double> m1 = solve_or_diverge(r.a, b1);
  auto first = [&](std::size_t u) { return u == 0 ? tau_t : m1[u - 1]; };

  std::vector<double> b2(n - 1);
  for (std::size_t i = 0; i < n - 1; ++i) {
    const std::size_t u = i + 1;
    double next = 0.0;
    for (std::size_t v = 0; v < n; ++v) next += m.transition[u][v] * first(v);
    b2[i] = m.holding[u].second_factorial() + 2.0 * m.holding[u].mean() * next + r.to_t[i] * s_t;
  }
  const std::vector<double> m2 = solve_or_diverge(r.a, b2);
  auto second = [&](std::size_t u) { return u == 0 ? s_t : m2[u - 1]; };

  ServiceMoments out;
  double g2 = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    out.d1 += m.transition[0][u] * first(u);
    g2 += m.transition[0][u] * second(u);
  }
  out.d2 = g2 + out.d1;
  return out;
}

ServiceMoments service_moments_closed_form(Family family, const HoldingTimes& h, double p,
                                           double alpha_tilde, double q0,
                                           const BackoffPolicy& backoff) {
  const int K = backoff.cutoff();
  const double a = alpha_tilde * q0;
  const double tt = h.tau_t;
  const double tf = h.tau_f;
  auto Q = [&](int k) { return backoff.q(k); };
  auto pw = [&](int k) { return std::pow(1.0 - p, k); };
  // sum_{j=i+1}^{K-1} (1-p)^j / (a Q(j))
  auto tail = [&](int i) {
    double s = 0.0;
    for (int j = i + 1; j < K; ++j) s += pw(j) / (a * Q(j));
    return s;
  };
  const double last = pw(K) / (p * a * Q(K));

  double d1 = last;
  for (int i = 0; i < K; ++i) d1 += pw(i) / (a * Q(i));
  double g2 = 0.0;

  if (family == Family::Aloha) {
    d1 += tt - 1.0;
    for (int i = 0; i < K; ++i) {
      const double bi = 1.0 / (a * Q(i));
      g2 += 2.0 * pw(i) * bi * (bi + tt - 2.0);
      g2 += 2.0 * bi * tail(i);
      g2 += 2.0 * pw(K) / (p * a * a * Q(K) * Q(i));
    }
    g2 += 2.0 * last * (1.0 / (p * a * Q(K)) + tt - 2.0) + (tt - 1.0) * (tt - 2.0);
  } else {
    const double e = tt + tf * (1.0 - p) / p;
    d1 += e;
    for (int i = 0; i < K; ++i) {
      const double bi = 1.0 / (a * Q(i));
      const double inner = tail(i) + e * pw(i + 1) + last;
      g2 += 2.0 * (tf + bi) * inner;
      g2 += 2.0 * p * pw(i) * bi * (e + bi / p - 1.0 / p);
    }
    g2 += tt * (tt - 1.0) + tf * (tf - 1.0) * (1.0 - p) / p;
    const double r = 1.0 / (p * a * Q(K));
    g2 += 2.0 * pw(K) * ((1.0 - p) / p * tf * e + r * (tt + 2.0 * (1.0 - p) / p * tf - 1.0) + r * r);
  }
  return {d1, g2 + d1};
}

ServiceMoments service_moments_closed_form(const Scenario& s, const SteadyState& st) {
  return service_moments_closed_form(s.scheme.family, st.holding, st.p, st.alpha_tilde, s.q0,
                                     s.backoff);
}

}  // namespace sensedelay
