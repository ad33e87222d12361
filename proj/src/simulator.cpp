#include "sensedelay/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "sensedelay/error.hpp"

namespace sensedelay {

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

enum : std::uint32_t { kArrivalStream = 0, kAccessStream = 1 };

std::mt19937_64 substream(std::uint64_t seed, int node, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), tag};
  return std::mt19937_64(seq);
}

// Number of trials up to and including the first success; 1 when p >= 1
// without touching the generator.
std::uint64_t draw_trials(std::mt19937_64& g, double p) {
  if (p >= 1.0) return 1;
  return std::geometric_distribution<std::uint64_t>(p)(g) + 1;
}

// Whole channel sensed as one shared state.
class ChannelAccess {
 public:
  explicit ChannelAccess(int) {}
  bool slot_open(std::uint64_t t) const { return t >= open_from_; }
  bool open(std::uint64_t t, int) const { return t >= open_from_; }
  void occupy(std::uint64_t t, std::uint64_t len) { open_from_ = t + len + 1; }

 private:
  std::uint64_t open_from_ = 0;
};

// Each node keeps its own mute timer, set when it senses a preamble in an
// occasion: L + Delta_S when the response shows a success, Delta_F otherwise.
class MuteAccess {
 public:
  explicit MuteAccess(int n) : open_from_(n, 0) {}
  bool open(std::uint64_t t, int i) const { return t >= open_from_[i]; }
  bool slot_open(std::uint64_t t) const {
    return std::any_of(open_from_.begin(), open_from_.end(),
                       [t](std::uint64_t f) { return t >= f; });
  }
  void occupy(std::uint64_t t, std::uint64_t len) {
    for (auto& f : open_from_) f = t + len + 1;
  }

 private:
  std::vector<std::uint64_t> open_from_;
};

struct Timing {
  std::uint64_t success_busy = 0;  // slots the channel stays busy after the request slot
  std::uint64_t fail_busy = 0;
  std::uint64_t success_done = 0;  // request slot to completion slot, exclusive
};

Timing timing_for(const AccessScheme& sch) {
  const HoldingTimes h = integer_holding_times(sch);
  const auto tt = static_cast<std::uint64_t>(h.tau_t);
  const auto tf = static_cast<std::uint64_t>(h.tau_f);
  Timing t;
  if (sch.family == Family::Aloha) {
    t.success_busy = tt - 1;
    t.success_done = tt - 1;
  } else {
    t.success_busy = tt;
    t.fail_busy = tf;
    t.success_done = tt;
  }
  return t;
}

template <class Access>
SimReport run(const Scenario& s, const SimConfig& cfg) {
  validate(s);
  if (cfg.slots <= cfg.warmup)
    throw Error(ErrorCode::InvalidArgument, "slots must exceed warmup");
  const AccessScheme sch = derive_slot(s.scheme);
  const Timing tm = timing_for(sch);
  const int n = s.n;
  const double lambda = s.packet_rate();
  if (lambda > 1.0)
    throw Error(ErrorCode::InvalidArgument,
                "per-node packet rate exceeds one packet per slot; Bernoulli arrivals need lambda <= 1");
  const int K = s.backoff.cutoff();
  std::vector<double> q(K + 1);
  for (int k = 0; k <= K; ++k) q[k] = s.q0 * s.backoff.q(k);

  std::vector<std::mt19937_64> arr_rng, acc_rng;
  arr_rng.reserve(n);
  acc_rng.reserve(n);
  for (int i = 0; i < n; ++i) {
    arr_rng.push_back(substream(cfg.seed, i, kArrivalStream));
    acc_rng.push_back(substream(cfg.seed, i, kAccessStream));
  }

  std::vector<std::uint64_t> next_arrival(n, kNever);
  if (lambda > 0.0)
    for (int i = 0; i < n; ++i) next_arrival[i] = draw_trials(arr_rng[i], lambda) - 1;
  std::vector<std::deque<std::uint64_t>> queue(n);
  std::vector<int> stage(n, 0);
  std::vector<std::uint64_t> countdown(n, 0);  // 0: not contending
  int pending = -1;                            // node whose success is in flight
  std::uint64_t pending_done = kNever;
  std::vector<int> req;
  req.reserve(n);

  Access acc(n);
  SimReport r;
  r.lambda = lambda;
  r.slot_ms = sch.slot_ms;
  r.slots = cfg.slots;
  r.warmup = cfg.warmup;
  r.seed = cfg.seed;

  const std::uint64_t measured = cfg.slots - cfg.warmup;
  const std::uint64_t head_end = cfg.warmup + std::max<std::uint64_t>(measured / 10, 1);
  const std::uint64_t tail_begin = cfg.slots - std::max<std::uint64_t>(measured / 100, 1);
  std::uint64_t total_q = 0, q_sum = 0, head_sum = 0, tail_sum = 0, soj_sum = 0;
  std::uint64_t m_departures = 0, m_requests = 0, m_successes = 0;

  auto start_hol = [&](int i) {
    stage[i] = 0;
    countdown[i] = draw_trials(acc_rng[i], q[0]);
  };
  if (cfg.initial_backlog > 0) {
    for (int i = 0; i < n; ++i) {
      queue[i].assign(cfg.initial_backlog, 0);
      start_hol(i);
    }
    total_q = r.arrivals = cfg.initial_backlog * n;
  }

  for (std::uint64_t t = 0; t < cfg.slots; ++t) {
    const bool on = t >= cfg.warmup;
    for (int i = 0; i < n; ++i) {
      if (next_arrival[i] != t) continue;
      queue[i].push_back(t);
      ++total_q;
      ++r.arrivals;
      next_arrival[i] = t + draw_trials(arr_rng[i], lambda);
      if (queue[i].size() == 1) start_hol(i);
    }

    if (acc.slot_open(t)) {
      if (on) ++r.accessible_slots;
      req.clear();
      for (int i = 0; i < n; ++i)
        if (countdown[i] > 0 && acc.open(t, i) && --countdown[i] == 0) req.push_back(i);
      if (on) m_requests += req.size();
      if (req.size() == 1) {
        const int j = req[0];
        pending = j;
        pending_done = t + tm.success_done;
        acc.occupy(t, tm.success_busy);
        if (on) ++m_successes;
      } else if (req.size() > 1) {
        for (int j : req) {
          stage[j] = std::min(stage[j] + 1, K);
          countdown[j] = draw_trials(acc_rng[j], q[stage[j]]);
        }
        acc.occupy(t, tm.fail_busy);
      }
    }

    if (on) {
      q_sum += total_q;
      if (t < head_end) head_sum += total_q;
      if (t >= tail_begin) tail_sum += total_q;
    }

    if (pending >= 0 && pending_done == t) {
      const int j = pending;
      const std::uint64_t a = queue[j].front();
      queue[j].pop_front();
      --total_q;
      ++r.departures;
      if (on) {
        ++m_departures;
        soj_sum += t - a + 1;
      }
      pending = -1;
      pending_done = kNever;
      if (!queue[j].empty()) start_hol(j);
    }
  }

  const double m = static_cast<double>(measured);
  r.final_queue_total = total_q;
  r.requests = m_requests;
  r.successes = m_successes;
  r.sojourn_samples = m_departures;
  r.mean_queue_len = static_cast<double>(q_sum) / m / n;
  r.delay_little_slots = lambda > 0.0 ? r.mean_queue_len / lambda : 0.0;
  r.delay_sojourn_slots = m_departures > 0 ? static_cast<double>(soj_sum) / m_departures : 0.0;
  r.throughput_pkts_per_slot = static_cast<double>(m_departures) / m;
  r.p_hat = m_requests > 0 ? static_cast<double>(m_successes) / m_requests : 0.0;
  r.p_hat_stderr = m_requests > 0 ? std::sqrt(r.p_hat * (1.0 - r.p_hat) / m_requests) : 0.0;
  r.alpha_hat = static_cast<double>(r.accessible_slots) / m;
  r.alpha_hat_stderr = std::sqrt(r.alpha_hat * (1.0 - r.alpha_hat) / m);

  const double head_mean = static_cast<double>(head_sum) / static_cast<double>(head_end - cfg.warmup);
  const double tail_mean = static_cast<double>(tail_sum) / static_cast<double>(cfg.slots - tail_begin);
  r.saturated_flag = tail_mean - head_mean > std::max<double>(n, head_mean);
  return r;
}

}  // namespace

HoldingTimes integer_holding_times(const AccessScheme& scheme) {
  HoldingTimes h = holding_times(scheme);
  auto whole = [&](double v, const char* name, double min) {
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9 * std::max(1.0, v) || r < min) {
      std::ostringstream os;
      os << name << " = " << v << " slots is not a whole number of slots";
      if (scheme.family == Family::Csma)
        os << "; choose slot_ms so that L + Delta_S and the failure time are multiples of it";
      else
        os << "; make L + Delta_S a multiple of Delta_F";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    return r;
  };
  h.tau_t = whole(h.tau_t, "tau_T", 1.0);
  h.tau_f = whole(h.tau_f, "tau_F", 0.0);
  return h;
}

SimReport simulate(const Scenario& s, const SimConfig& cfg) { return run<ChannelAccess>(s, cfg); }

const char* to_string(RaSdtVariant v) {
  switch (v) {
    case RaSdtVariant::SensingFree2Step: return "sensing-free-2step";
    case RaSdtVariant::SensingFree4Step: return "sensing-free-4step";
    case RaSdtVariant::SensingBased2Step: return "sensing-based-2step";
    case RaSdtVariant::SensingBased4Step: return "sensing-based-4step";
  }
  return "?";
}

RaSdtVariant ra_sdt_variant_from_string(const std::string& name) {
  for (auto v : {RaSdtVariant::SensingFree2Step, RaSdtVariant::SensingFree4Step,
                 RaSdtVariant::SensingBased2Step, RaSdtVariant::SensingBased4Step})
    if (name == to_string(v)) return v;
  throw Error(ErrorCode::InvalidArgument, "unknown RA-SDT variant '" + name + "'");
}

AccessScheme ra_sdt_scheme(RaSdtVariant v) {
  AccessScheme a;
  a.payload_ms = kRaSdtPayloadMs;
  const bool two_step =
      v == RaSdtVariant::SensingFree2Step || v == RaSdtVariant::SensingBased2Step;
  if (two_step) {
    a.connection = Connection::Free;
    a.overhead_success_ms = a.overhead_fail_ms = 5.5;
  } else {
    a.connection = Connection::Based;
    a.overhead_success_ms = 7.5;
    a.overhead_fail_ms = 2.0;
  }
  const bool sensing =
      v == RaSdtVariant::SensingBased2Step || v == RaSdtVariant::SensingBased4Step;
  a.family = sensing ? Family::Csma : Family::Aloha;
  a.slot_ms = sensing ? kRaSdtSensingMs : 0.0;
  return derive_slot(a);
}

SimReport simulate_ra_sdt(RaSdtVariant v, const Scenario& s, const SimConfig& cfg) {
  Scenario m = s;
  m.scheme = ra_sdt_scheme(v);
  if (m.scheme.family == Family::Aloha) return simulate(m, cfg);
  return run<MuteAccess>(m, cfg);
}

}  // namespace sensedelay
