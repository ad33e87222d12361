#include "sensedelay/model.hpp"

#include <cmath>
#include <sstream>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, msg);
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

const char* to_string(Family f) { return f == Family::Aloha ? "aloha" : "csma"; }
const char* to_string(Connection c) { return c == Connection::Free ? "free" : "based"; }

const char* to_string(BackoffKind k) {
  switch (k) {
    case BackoffKind::Constant: return "cb";
    case BackoffKind::BinaryExponential: return "beb";
    case BackoffKind::CustomTable: return "table";
  }
  return "?";
}

AccessScheme derive_slot(AccessScheme scheme) {
  require(std::isfinite(scheme.payload_ms) && scheme.payload_ms > 0.0,
          "payload_ms must be positive");
  require(std::isfinite(scheme.overhead_success_ms) && scheme.overhead_success_ms >= 0.0,
          "overhead_success_ms must be non-negative");
  require(std::isfinite(scheme.overhead_fail_ms) && scheme.overhead_fail_ms >= 0.0,
          "overhead_fail_ms must be non-negative");

  if (scheme.family == Family::Aloha) {
    if (scheme.connection == Connection::Free) {
      require(nearly_equal(scheme.overhead_success_ms, scheme.overhead_fail_ms),
              "connection-free Aloha requires overhead_success_ms == overhead_fail_ms");
      scheme.slot_ms = scheme.payload_ms + scheme.overhead_fail_ms;
    } else {
      require(scheme.overhead_fail_ms > 0.0,
              "connection-based Aloha requires a positive overhead_fail_ms (the request slot)");
      scheme.slot_ms = scheme.overhead_fail_ms;
    }
  } else {
    require(std::isfinite(scheme.slot_ms) && scheme.slot_ms > 0.0,
            "CSMA requires a positive sensing slot_ms");
  }
  return scheme;
}

HoldingTimes holding_times(const AccessScheme& in) {
  const AccessScheme s = derive_slot(in);
  HoldingTimes h;
  if (s.family == Family::Aloha) {
    h.tau_t = s.connection == Connection::Free ? 1.0 : s.success_ms() / s.slot_ms;
    h.tau_f = 0.0;
  } else {
    h.tau_t = s.success_ms() / s.slot_ms;
    h.tau_f = s.failure_ms() / s.slot_ms;
  }
  return h;
}

BackoffPolicy BackoffPolicy::constant(int cutoff) {
  require(cutoff >= 0, "backoff cutoff must be >= 0");
  return BackoffPolicy(BackoffKind::Constant, std::vector<double>(cutoff + 1, 1.0));
}

BackoffPolicy BackoffPolicy::binary_exponential(int cutoff) {
  require(cutoff >= 0, "backoff cutoff must be >= 0");
  require(cutoff <= 1000, "backoff cutoff too large");
  std::vector<double> t(cutoff + 1);
  for (int k = 0; k <= cutoff; ++k) t[k] = std::ldexp(1.0, -k);
  // K = 0 degenerates to constant backoff.
  return BackoffPolicy(cutoff == 0 ? BackoffKind::Constant : BackoffKind::BinaryExponential,
                       std::move(t));
}

BackoffPolicy BackoffPolicy::custom(std::vector<double> table) {
  require(!table.empty(), "backoff table must contain Q(0)");
  require(table[0] == 1.0, "backoff table must start with Q(0) = 1");
  for (std::size_t k = 0; k < table.size(); ++k) {
    require(std::isfinite(table[k]) && table[k] > 0.0 && table[k] <= 1.0,
            "backoff table entries must lie in (0,1]");
    if (k > 0) require(table[k] <= table[k - 1], "backoff table must be non-increasing");
  }
  return BackoffPolicy(BackoffKind::CustomTable, std::move(table));
}

double packet_rate(const Scenario& s) {
  const AccessScheme sch = derive_slot(s.scheme);
  require(s.encoding_rate > 0.0, "encoding_rate must be positive");
  return s.bit_rate_per_node * sch.slot_ms / (s.encoding_rate * sch.payload_ms);
}

double Scenario::packet_rate() const { return sensedelay::packet_rate(*this); }

double bit_rate_for_packet_rate(const AccessScheme& scheme, double encoding_rate, double lambda) {
  const AccessScheme sch = derive_slot(scheme);
  return lambda * encoding_rate * sch.payload_ms / sch.slot_ms;
}

Scenario Scenario::with_aggregate_packet_rate(double lambda_hat) const {
  Scenario s = *this;
  s.scheme = derive_slot(scheme);
  s.bit_rate_per_node = bit_rate_for_packet_rate(s.scheme, encoding_rate, lambda_hat / n);
  return s;
}

Scenario Scenario::with_aggregate_bit_rate(double lambda_tilde) const {
  Scenario s = *this;
  s.bit_rate_per_node = lambda_tilde / n;
  return s;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> warnings;
  require(s.n >= 1, "n must be >= 1");
  require(std::isfinite(s.q0) && s.q0 > 0.0 && s.q0 <= 1.0, "q0 must lie in (0,1]");
  require(std::isfinite(s.bit_rate_per_node) && s.bit_rate_per_node >= 0.0,
          "bit_rate_per_node must be non-negative");
  require(std::isfinite(s.encoding_rate) && s.encoding_rate > 0.0,
          "encoding_rate must be positive");
  const AccessScheme sch = derive_slot(s.scheme);

  if (s.n < 2) warnings.emplace_back("n < 2: the analytical model assumes contention among n >= 2 nodes");
  if (sch.family == Family::Csma && sch.slot_ms > sch.payload_ms + sch.overhead_fail_ms) {
    std::ostringstream os;
    os << "sensing slot " << sch.slot_ms << " ms exceeds the failed-transmission time "
       << sch.payload_ms + sch.overhead_fail_ms << " ms";
    warnings.push_back(os.str());
  }
  const double lambda = s.packet_rate();
  if (lambda > 1.0) warnings.emplace_back("per-node packet rate exceeds one packet per slot");
  return warnings;
}

}  // namespace sensedelay
