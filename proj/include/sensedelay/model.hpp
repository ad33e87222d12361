#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sensedelay {

enum class Family { Aloha, Csma };
enum class Connection { Free, Based };

const char* to_string(Family f);
const char* to_string(Connection c);

/// Protocol family, connection mode and the timing overheads (all in ms).
///
/// For Aloha the slot length follows from the overheads (see derive_slot);
/// for CSMA `slot_ms` is the sensing time and must be supplied.
struct AccessScheme {
  Family family = Family::Aloha;
  Connection connection = Connection::Free;
  double payload_ms = 1.0;           // L
  double overhead_success_ms = 0.0;  // Delta_S
  double overhead_fail_ms = 0.0;     // Delta_F
  double slot_ms = 0.0;              // sigma

  /// Duration of a successful transmission, L + Delta_S.
  double success_ms() const { return payload_ms + overhead_success_ms; }
  /// Duration of a failed transmission: L + Delta_F (connection-free) or Delta_F.
  double failure_ms() const {
    return connection == Connection::Free ? payload_ms + overhead_fail_ms : overhead_fail_ms;
  }
};

/// Mean holding times in slots. tau_f is zero for Aloha, where a failure
/// always costs exactly one slot.
struct HoldingTimes {
  double tau_t = 1.0;
  double tau_f = 0.0;
};

/// Populates slot_ms for Aloha and validates the timing. Idempotent.
AccessScheme derive_slot(AccessScheme scheme);

HoldingTimes holding_times(const AccessScheme& scheme);

enum class BackoffKind { Constant, BinaryExponential, CustomTable };

/// Backoff function Q(k) with cutoff K: Q(0) = 1, non-increasing, constant
/// from K on.
class BackoffPolicy {
 public:
  BackoffPolicy() = default;

  static BackoffPolicy constant(int cutoff = 0);
  static BackoffPolicy binary_exponential(int cutoff);
  /// `table` holds Q(0..K); validated for Q(0) = 1, range (0,1], monotonicity.
  static BackoffPolicy custom(std::vector<double> table);

  BackoffKind kind() const { return kind_; }
  int cutoff() const { return static_cast<int>(table_.size()) - 1; }
  /// Q(k) for any k >= 0.
  double q(int k) const { return table_[k < cutoff() ? k : cutoff()]; }
  const std::vector<double>& table() const { return table_; }

  friend bool operator==(const BackoffPolicy&, const BackoffPolicy&) = default;

 private:
  BackoffPolicy(BackoffKind kind, std::vector<double> table)
      : kind_(kind), table_(std::move(table)) {}

  BackoffKind kind_ = BackoffKind::Constant;
  std::vector<double> table_{1.0};
};

const char* to_string(BackoffKind k);

/// A complete symmetric network instance.
struct Scenario {
  int n = 2;
  AccessScheme scheme;
  BackoffPolicy backoff;
  double q0 = 0.1;
  double bit_rate_per_node = 0.0;  // lambda_b, bit/s/Hz
  double encoding_rate = 1.0;      // R, bit/s/Hz

  /// Per-node packet rate in packets per slot, lambda = lambda_b sigma / (R L).
  double packet_rate() const;
  /// Aggregate packet rate n * lambda.
  double aggregate_packet_rate() const { return n * packet_rate(); }
  /// Aggregate bit rate n * lambda_b.
  double aggregate_bit_rate() const { return n * bit_rate_per_node; }

  /// Copy with slot derived and lambda_b chosen so that n*lambda == lambda_hat.
  Scenario with_aggregate_packet_rate(double lambda_hat) const;
  /// Copy with lambda_b = lambda_tilde / n.
  Scenario with_aggregate_bit_rate(double lambda_tilde) const;
  Scenario with_q0(double q) const {
    Scenario s = *this;
    s.q0 = q;
    return s;
  }
};

/// lambda = lambda_b sigma / (R L); the scheme's slot must be resolvable.
double packet_rate(const Scenario& s);

/// Inverse of packet_rate: the per-node bit rate giving `lambda` packets/slot.
double bit_rate_for_packet_rate(const AccessScheme& scheme, double encoding_rate, double lambda);

/// Hard errors throw sensedelay::Error; model-atypical settings are returned
/// as warnings.
std::vector<std::string> validate(const Scenario& s);

}  // namespace sensedelay
