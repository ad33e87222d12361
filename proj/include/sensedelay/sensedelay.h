#ifndef SENSEDELAY_H
#define SENSEDELAY_H

#include <stddef.h>
#include <stdint.h>

#if defined(SENSEDELAY_BUILDING)
#define SD_API __attribute__((visibility("default")))
#else
#define SD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sd_status {
  SD_OK = 0,
  SD_ERR_INVALID_ARGUMENT = 1,
  SD_ERR_DOMAIN = 2,
  SD_ERR_NO_ROOTS = 3,
  SD_ERR_SATURATED = 4,
  SD_ERR_INCONSISTENT_REGIME = 5,
  SD_ERR_DIVERGENT_SERVICE = 6,
  SD_ERR_ALOHA_SATURATED = 7,
  SD_ERR_CONFIG = 8,
  SD_ERR_INTERNAL = 99
} sd_status;

/* Message for the last failed call on this thread; "" after a success. */
SD_API const char* sd_last_error(void);
SD_API const char* sd_status_name(sd_status s);
SD_API const char* sd_version(void);

/* Strings returned through char** are heap copies owned by the caller. */
SD_API void sd_string_free(char* s);

typedef struct sd_scenario sd_scenario;

/* Accepts the "scenario" object of a config file. */
SD_API sd_status sd_scenario_from_json(const char* json, sd_scenario** out);
SD_API sd_status sd_scenario_to_json(const sd_scenario* s, char** out);
SD_API sd_status sd_scenario_set_q0(sd_scenario* s, double q0);
SD_API sd_status sd_scenario_set_aggregate_packet_rate(sd_scenario* s, double lambda_hat);
SD_API sd_status sd_scenario_set_aggregate_bit_rate(sd_scenario* s, double lambda_tilde);
SD_API void sd_scenario_free(sd_scenario* s);

typedef struct sd_analysis {
  double tau_t;
  double tau_f;
  double lambda_hat;
  double lambda_hat_max;
  double region_lower; /* NaN when the region is empty */
  double region_upper;
  double p;
  double alpha;
  double alpha_tilde;
  double mu;
  double rho;
  double omega;
  double t_slots; /* +inf when not finite */
  double t_ms;
  int saturated;
  int finite;
} sd_analysis;

SD_API sd_status sd_analyze(const sd_scenario* s, int exact_finite_n, sd_analysis* out);

/* epsilon <= 0 selects the default gap. */
SD_API sd_status sd_optimal_q0(const sd_scenario* s, int exact_finite_n, double epsilon,
                               double* q0_star, double* t_min_ms);

typedef struct sd_sim_config {
  uint64_t slots;
  uint64_t warmup;
  uint64_t seed;
  uint64_t initial_backlog;
} sd_sim_config;

SD_API sd_sim_config sd_sim_config_default(void);

typedef struct sd_sim_report {
  double mean_queue_len;
  double delay_little_slots;
  double delay_sojourn_slots;
  double throughput_pkts_per_slot;
  double p_hat;
  double alpha_hat;
  int saturated_flag;
  double p_hat_stderr;
  double slot_ms;
  uint64_t arrivals;
  uint64_t departures;
  uint64_t final_queue_total;
} sd_sim_report;

SD_API sd_status sd_simulate(const sd_scenario* s, const sd_sim_config* cfg, sd_sim_report* out);

/* variant: "sensing-free-2step", "sensing-free-4step", "sensing-based-2step"
   or "sensing-based-4step". The scenario's access scheme is replaced. */
SD_API sd_status sd_simulate_ra_sdt(const char* variant, const sd_scenario* s,
                                    const sd_sim_config* cfg, sd_sim_report* out);

/* connection_based: 0 free, 1 based. Times in ms. */
SD_API sd_status sd_throughput_bound(int connection_based, double payload_ms,
                                     double overhead_success_ms, double overhead_fail_ms,
                                     double* sigma_ms);

typedef struct sd_delay_bound {
  double sigma_star_throughput_ms;
  double sigma_star_delay_ms;
  double t_min_aloha_ms;
  double t_min_csma_ms;
  int non_monotone;
  int clipped_at_ceiling;
  int below_floor;
} sd_delay_bound;

/* The scenario supplies n, backoff, R and the base timing; tol_ms <= 0
   selects the default. */
SD_API sd_status sd_delay_optimal_bound(const sd_scenario* s, double lambda_tilde, double tol_ms,
                                        sd_delay_bound* out);

typedef struct sd_experiment sd_experiment;
typedef struct sd_result sd_result;

SD_API sd_status sd_experiment_from_json(const char* json, sd_experiment** out);
SD_API sd_status sd_experiment_set_command(sd_experiment* e, const char* command);
SD_API sd_status sd_experiment_set_seed(sd_experiment* e, uint64_t seed);
SD_API sd_status sd_experiment_set_slots(sd_experiment* e, uint64_t slots);
SD_API sd_status sd_experiment_set_warmup(sd_experiment* e, uint64_t warmup);
SD_API sd_status sd_experiment_set_exact_finite_n(sd_experiment* e, int enabled);
SD_API sd_status sd_experiment_to_json(const sd_experiment* e, char** out);
SD_API sd_status sd_experiment_manifest(const sd_experiment* e, const char* output_path,
                                        const char* format, char** out);
SD_API sd_status sd_experiment_run(const sd_experiment* e, int jobs, sd_result** out);
SD_API void sd_experiment_free(sd_experiment* e);

/* Returned strings live as long as the result. */
SD_API const char* sd_result_csv(const sd_result* r);
SD_API const char* sd_result_json(const sd_result* r);
SD_API size_t sd_result_rows(const sd_result* r);
SD_API int sd_result_failures(const sd_result* r);
SD_API size_t sd_result_note_count(const sd_result* r);
SD_API const char* sd_result_note(const sd_result* r, size_t i);
SD_API void sd_result_free(sd_result* r);

#ifdef __cplusplus
}
#endif

#endif
