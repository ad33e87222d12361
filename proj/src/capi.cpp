#define SENSEDELAY_BUILDING
#include "sensedelay/sensedelay.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "sensedelay/delay.hpp"
#include "sensedelay/error.hpp"
#include "sensedelay/experiment.hpp"

using namespace sensedelay;

struct sd_scenario {
  Scenario s;
};

struct sd_experiment {
  ExperimentSpec spec;
};

struct sd_result {
  Table table;
  std::string csv;
  std::string json;
};

namespace {

thread_local std::string last_error;

sd_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return SD_ERR_INVALID_ARGUMENT;
    case ErrorCode::Domain: return SD_ERR_DOMAIN;
    case ErrorCode::NoRoots: return SD_ERR_NO_ROOTS;
    case ErrorCode::Saturated: return SD_ERR_SATURATED;
    case ErrorCode::InconsistentRegime: return SD_ERR_INCONSISTENT_REGIME;
    case ErrorCode::DivergentService: return SD_ERR_DIVERGENT_SERVICE;
    case ErrorCode::AlohaSaturated: return SD_ERR_ALOHA_SATURATED;
    case ErrorCode::Config: return SD_ERR_CONFIG;
  }
  return SD_ERR_INTERNAL;
}

sd_status fail(sd_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
sd_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return SD_OK;
  } catch (const Error& e) {
    return fail(code_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SD_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

FixedPointForm form_of(int exact) { return exact ? FixedPointForm::ExactFiniteN : FixedPointForm::LargeN; }

SimConfig sim_of(const sd_sim_config* c) {
  if (!c) return {};
  return {c->slots, c->warmup, c->seed, c->initial_backlog};
}

void fill(const SimReport& r, sd_sim_report* out) {
  *out = {};
  out->mean_queue_len = r.mean_queue_len;
  out->delay_little_slots = r.delay_little_slots;
  out->delay_sojourn_slots = r.delay_sojourn_slots;
  out->throughput_pkts_per_slot = r.throughput_pkts_per_slot;
  out->p_hat = r.p_hat;
  out->alpha_hat = r.alpha_hat;
  out->saturated_flag = r.saturated_flag;
  out->p_hat_stderr = r.p_hat_stderr;
  out->slot_ms = r.slot_ms;
  out->arrivals = r.arrivals;
  out->departures = r.departures;
  out->final_queue_total = r.final_queue_total;
}

void check_scenario(const Scenario& s) {
  const auto problems = validate(s);
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, problems.front());
}

}  // namespace

extern "C" {

const char* sd_last_error(void) { return last_error.c_str(); }

const char* sd_status_name(sd_status s) {
  switch (s) {
    case SD_OK: return "ok";
    case SD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SD_ERR_DOMAIN: return "domain";
    case SD_ERR_NO_ROOTS: return "no_roots";
    case SD_ERR_SATURATED: return "saturated";
    case SD_ERR_INCONSISTENT_REGIME: return "inconsistent_regime";
    case SD_ERR_DIVERGENT_SERVICE: return "divergent_service";
    case SD_ERR_ALOHA_SATURATED: return "aloha_saturated";
    case SD_ERR_CONFIG: return "config";
    case SD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sd_version(void) {
  static const std::string v = tool_version();
  return v.c_str();
}

void sd_string_free(char* s) { delete[] s; }

sd_status sd_scenario_from_json(const char* json, sd_scenario** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    Scenario s = parse_scenario(json);
    *out = new sd_scenario{std::move(s)};
  });
}

sd_status sd_scenario_to_json(const sd_scenario* s, char** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = dup(scenario_to_json(s->s));
  });
}

sd_status sd_scenario_set_q0(sd_scenario* s, double q0) {
  return guard([&] {
    need(s, "scenario");
    if (!(q0 > 0.0 && q0 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "q0 must lie in (0,1]");
    s->s.q0 = q0;
  });
}

sd_status sd_scenario_set_aggregate_packet_rate(sd_scenario* s, double lambda_hat) {
  return guard([&] {
    need(s, "scenario");
    if (!(lambda_hat >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be >= 0");
    s->s = s->s.with_aggregate_packet_rate(lambda_hat);
  });
}

sd_status sd_scenario_set_aggregate_bit_rate(sd_scenario* s, double lambda_tilde) {
  return guard([&] {
    need(s, "scenario");
    if (!(lambda_tilde >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be >= 0");
    s->s = s->s.with_aggregate_bit_rate(lambda_tilde);
  });
}

void sd_scenario_free(sd_scenario* s) { delete s; }

sd_status sd_analyze(const sd_scenario* s, int exact_finite_n, sd_analysis* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    check_scenario(s->s);
    const DelayResult d = mean_queueing_delay(s->s, form_of(exact_finite_n));
    const SteadyState& st = d.steady;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    *out = {};
    out->tau_t = st.holding.tau_t;
    out->tau_f = st.holding.tau_f;
    out->lambda_hat = st.lambda_hat;
    out->lambda_hat_max = max_throughput(s->s.scheme);
    out->region_lower = st.region.empty ? nan : st.region.q0_lower;
    out->region_upper = st.region.empty ? nan : st.region.q0_upper;
    out->p = st.p;
    out->alpha = st.alpha;
    out->alpha_tilde = st.alpha_tilde;
    out->mu = st.mu;
    out->rho = st.rho;
    out->omega = st.omega;
    out->t_slots = d.t_slots;
    out->t_ms = d.t_ms;
    out->saturated = st.regime == Regime::Saturated;
    out->finite = d.finite;
  });
}

sd_status sd_optimal_q0(const sd_scenario* s, int exact_finite_n, double epsilon, double* q0_star,
                        double* t_min_ms) {
  return guard([&] {
    need(s, "scenario");
    check_scenario(s->s);
    SolverOptions opt;
    opt.form = form_of(exact_finite_n);
    if (epsilon > 0.0) opt.epsilon = epsilon;
    const OptimalQ0 o = optimal_q0(s->s, opt);
    if (q0_star) *q0_star = o.q0_star;
    if (t_min_ms) *t_min_ms = o.delay.t_ms;
  });
}

sd_sim_config sd_sim_config_default(void) {
  const SimConfig c;
  return {c.slots, c.warmup, c.seed, c.initial_backlog};
}

sd_status sd_simulate(const sd_scenario* s, const sd_sim_config* cfg, sd_sim_report* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    check_scenario(s->s);
    fill(simulate(s->s, sim_of(cfg)), out);
  });
}

sd_status sd_simulate_ra_sdt(const char* variant, const sd_scenario* s, const sd_sim_config* cfg,
                             sd_sim_report* out) {
  return guard([&] {
    need(variant, "variant");
    need(s, "scenario");
    need(out, "out");
    fill(simulate_ra_sdt(ra_sdt_variant_from_string(variant), s->s, sim_of(cfg)), out);
  });
}

sd_status sd_throughput_bound(int connection_based, double payload_ms, double overhead_success_ms,
                              double overhead_fail_ms, double* sigma_ms) {
  return guard([&] {
    need(sigma_ms, "sigma_ms");
    *sigma_ms = throughput_optimal_bound(connection_based ? Connection::Based : Connection::Free,
                                         payload_ms, overhead_success_ms, overhead_fail_ms);
  });
}

sd_status sd_delay_optimal_bound(const sd_scenario* s, double lambda_tilde, double tol_ms,
                                 sd_delay_bound* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    SensingSearchConfig cfg;
    if (tol_ms > 0.0) cfg.tol_ms = tol_ms;
    const SensingBoundResult r = delay_optimal_bound(s->s, lambda_tilde, cfg);
    *out = {};
    out->sigma_star_throughput_ms = r.sigma_star_throughput_ms;
    out->sigma_star_delay_ms = r.sigma_star_delay_ms;
    out->t_min_aloha_ms = r.t_min_aloha_ms;
    out->t_min_csma_ms = r.t_min_csma_ms;
    out->non_monotone = r.non_monotone;
    out->clipped_at_ceiling = r.clipped_at_ceiling;
    out->below_floor = r.below_floor;
  });
}

sd_status sd_experiment_from_json(const char* json, sd_experiment** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    ExperimentSpec e = parse_experiment(json);
    *out = new sd_experiment{std::move(e)};
  });
}

sd_status sd_experiment_set_command(sd_experiment* e, const char* command) {
  return guard([&] {
    need(e, "experiment");
    need(command, "command");
    e->spec.command = command_from_string(command);
  });
}

sd_status sd_experiment_set_seed(sd_experiment* e, uint64_t seed) {
  return guard([&] {
    need(e, "experiment");
    e->spec.sim.seed = seed;
  });
}

sd_status sd_experiment_set_slots(sd_experiment* e, uint64_t slots) {
  return guard([&] {
    need(e, "experiment");
    if (slots <= e->spec.sim.warmup)
      throw Error(ErrorCode::Config, "simulation.slots: must exceed simulation.warmup");
    e->spec.sim.slots = slots;
  });
}

sd_status sd_experiment_set_warmup(sd_experiment* e, uint64_t warmup) {
  return guard([&] {
    need(e, "experiment");
    if (warmup >= e->spec.sim.slots)
      throw Error(ErrorCode::Config, "simulation.warmup: must be below simulation.slots");
    e->spec.sim.warmup = warmup;
  });
}

sd_status sd_experiment_set_exact_finite_n(sd_experiment* e, int enabled) {
  return guard([&] {
    need(e, "experiment");
    e->spec.solver.form = form_of(enabled);
  });
}

sd_status sd_experiment_to_json(const sd_experiment* e, char** out) {
  return guard([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup(to_json(e->spec));
  });
}

sd_status sd_experiment_manifest(const sd_experiment* e, const char* output_path, const char* format,
                                 char** out) {
  return guard([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup(manifest_json(e->spec, output_path ? output_path : "", format ? format : ""));
  });
}

sd_status sd_experiment_run(const sd_experiment* e, int jobs, sd_result** out) {
  return guard([&] {
    need(e, "experiment");
    need(out, "out");
    *out = nullptr;
    if (e->spec.command != Command::Validate) check_scenario(e->spec.scenario);
    auto r = new sd_result{run_experiment(e->spec, jobs < 1 ? 1 : jobs), {}, {}};
    r->csv = r->table.to_csv();
    r->json = r->table.to_json();
    *out = r;
  });
}

void sd_experiment_free(sd_experiment* e) { delete e; }

const char* sd_result_csv(const sd_result* r) { return r ? r->csv.c_str() : ""; }
const char* sd_result_json(const sd_result* r) { return r ? r->json.c_str() : ""; }
size_t sd_result_rows(const sd_result* r) { return r ? r->table.rows.size() : 0; }
int sd_result_failures(const sd_result* r) { return r ? r->table.failures : 0; }
size_t sd_result_note_count(const sd_result* r) { return r ? r->table.notes.size() : 0; }

const char* sd_result_note(const sd_result* r, size_t i) {
  return r && i < r->table.notes.size() ? r->table.notes[i].c_str() : "";
}

void sd_result_free(sd_result* r) { delete r; }

}  // extern "C"
