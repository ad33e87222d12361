#pragma once

#include <cstdint>
#include <string>

#include "sensedelay/model.hpp"

namespace sensedelay {

struct SimConfig {
  std::uint64_t slots = 10'000'000;
  std::uint64_t warmup = 100'000;
  std::uint64_t seed = 1;
  std::uint64_t initial_backlog = 0;  // packets queued at every node at slot 0
};

/// Estimates from one slotted run. Averages cover the slots after warmup;
/// the conservation counters cover the whole run.
struct SimReport {
  double mean_queue_len = 0.0;  // per node
  double delay_little_slots = 0.0;
  double delay_sojourn_slots = 0.0;
  double throughput_pkts_per_slot = 0.0;
  double p_hat = 0.0;
  double alpha_hat = 0.0;
  bool saturated_flag = false;

  double p_hat_stderr = 0.0;
  double alpha_hat_stderr = 0.0;
  double lambda = 0.0;  // nominal per-node packet rate
  double slot_ms = 0.0;
  std::uint64_t slots = 0;
  std::uint64_t warmup = 0;
  std::uint64_t seed = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  std::uint64_t final_queue_total = 0;
  std::uint64_t requests = 0;
  std::uint64_t successes = 0;
  std::uint64_t accessible_slots = 0;
  std::uint64_t sojourn_samples = 0;

  bool conserved() const { return arrivals == departures + final_queue_total; }
  friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// Integer holding times for the simulator. Throws Error(InvalidArgument) with
/// a hint when tau_T or tau_F is not a whole number of slots.
HoldingTimes integer_holding_times(const AccessScheme& scheme);

SimReport simulate(const Scenario& s, const SimConfig& cfg);

enum class RaSdtVariant { SensingFree2Step, SensingFree4Step, SensingBased2Step, SensingBased4Step };

const char* to_string(RaSdtVariant v);
RaSdtVariant ra_sdt_variant_from_string(const std::string& name);

constexpr double kRaSdtPayloadMs = 0.5;
constexpr double kRaSdtSensingMs = 0.5;
constexpr double kRaSdtEncodingRate = 0.3066;

/// Standard RA-SDT timing for the variant: 2-step uses Delta_S = Delta_F = 5.5 ms,
/// 4-step Delta_S = 7.5 ms, Delta_F = 2 ms; sensing variants are CSMA with a
/// 0.5 ms sensing slot.
AccessScheme ra_sdt_scheme(RaSdtVariant v);

/// Runs the RA-SDT algorithm for `v` on the scenario's n, q0, backoff and
/// per-node bit rate (its scheme is replaced). Sensing-free variants run the
/// Aloha engine; sensing-based variants track per-node mute timers set from
/// the sensed preamble occasion and the observed outcome.
SimReport simulate_ra_sdt(RaSdtVariant v, const Scenario& s, const SimConfig& cfg);

}  // namespace sensedelay
