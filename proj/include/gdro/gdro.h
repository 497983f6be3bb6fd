/* C interface to the gdro library.
 *
 * Conventions:
 *   - Every fallible call returns a gdro_status; GDRO_OK is 0.
 *   - On failure, gdro_last_error() returns a message for the most recent
 *     failing call on the calling thread. The pointer stays valid until the
 *     next failing call on that thread.
 *   - Objects are opaque handles created by *_open / gdro_train and released
 *     by the matching *_close. Closing NULL is a no-op.
 *   - Strings returned through char** out-parameters are heap-allocated and
 *     must be released with gdro_string_free.
 *   - Structured inputs and outputs are JSON text; the shapes are documented
 *     per function.
 */
#ifndef GDRO_GDRO_H_
#define GDRO_GDRO_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gdro_status {
  GDRO_OK = 0,
  GDRO_ERR_INVALID_ARGUMENT = 1, /* bad value, bad dimension, NULL handle */
  GDRO_ERR_IO = 2,               /* file missing or unwritable */
  GDRO_ERR_PARSE = 3,            /* malformed CSV or JSON */
  GDRO_ERR_NUMERIC = 4,          /* divergence (NaN/Inf) during optimization */
  GDRO_ERR_EMPTY_GROUP = 5,      /* a group has no samples */
  GDRO_ERR_INTERNAL = 6          /* unexpected failure */
} gdro_status;

typedef struct gdro_dataset gdro_dataset;
typedef struct gdro_model gdro_model;
typedef struct gdro_history gdro_history;

/* Library version, e.g. "1.0.0". Static storage, do not free. */
const char* gdro_version(void);

/* Message from the most recent failing call on this thread ("" if none). */
const char* gdro_last_error(void);

/* Releases a string returned through a char** out-parameter. */
void gdro_string_free(char* s);

/* Loads an Adult-schema CSV and runs the full preparation pipeline (missing
 * rows dropped, groups assigned, features encoded and standardized, uniform-
 * education training split drawn). pipeline_json may be NULL or "" for the
 * defaults; otherwise an object with optional keys:
 *   train_fraction (0,1), seed, subsample (0 = full split),
 *   columns {label, race, education}.
 */
gdro_status gdro_dataset_open(const char* csv_path, const char* pipeline_json,
                              gdro_dataset** out);

/* JSON summary: d_in, n_train, n_test_pool, per-group counts for both splits,
 * and feature_names. */
gdro_status gdro_dataset_info(const gdro_dataset* data, char** json_out);

void gdro_dataset_close(gdro_dataset* data);

/* Trains on the dataset's training split. train_json is an object with
 * optional keys: method ("erm" | "dro" | "gdro" | "ours"), gamma, eta_theta,
 * eta_q, eta_z, t_outer, t_rob, seed. history_out may be NULL if the caller
 * does not need per-iteration records.
 */
gdro_status gdro_train(const gdro_dataset* data, const char* train_json,
                       gdro_model** model_out, gdro_history** history_out);

gdro_status gdro_model_save(const gdro_model* model, const char* path);
gdro_status gdro_model_open(const char* path, gdro_model** out);
void gdro_model_close(gdro_model* model);

/* Per-group accuracies on one split of the dataset. split is "train" or
 * "test_pool". environment_json (test_pool only) may be NULL or "" for the
 * whole split, or an object with keys name, natural, p_high, size, threshold,
 * seed describing an education-shifted draw. Returns JSON with environment,
 * avg_acc, worst_acc, range_acc, per_group_acc, group_counts.
 */
gdro_status gdro_evaluate(const gdro_model* model, const gdro_dataset* data,
                          const char* split, const char* environment_json,
                          char** json_out);

/* Writes iteration,duality_gap,grad_norm,loss_g*,q_g* rows. */
gdro_status gdro_history_save_csv(const gdro_history* history, const char* path);
void gdro_history_close(gdro_history* history);

/* Education-marginal histograms (train, test_pool, then each environment in
 * environments_json, a JSON array of environment objects). run_seed mixes
 * into each environment's draw seed the same way gdro_experiment_run does.
 */
gdro_status gdro_environment_histogram_csv(const gdro_dataset* data,
                                           const char* environments_json,
                                           uint64_t run_seed,
                                           const char* out_path);

/* Runs the full experiment grid described by config_json (see README for the
 * schema) and writes config.json, results.csv, summary.csv and history/ under
 * the output directory. output_dir_override, if non-NULL and nonempty,
 * replaces the config's output_dir.
 */
gdro_status gdro_experiment_run(const char* config_json,
                                const char* output_dir_override);

/* Runs the internal verification suite. report_out receives one line per
 * check plus a final tally; all_pass receives 1 if every check passed.
 * Either out-parameter may be NULL.
 */
gdro_status gdro_verify(uint64_t seed, char** report_out, int* all_pass);

/* Writes the bundled synthetic Adult-schema CSV (used when the real dataset
 * is not available). scale in (0,1] shrinks every block proportionally;
 * missing_rows rows get a blank field so the drop step has work to do.
 */
gdro_status gdro_synthetic_dataset_write(const char* path, uint64_t seed,
                                         double scale, int missing_rows);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GDRO_GDRO_H_ */
