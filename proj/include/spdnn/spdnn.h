#ifndef SPDNN_H
#define SPDNN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes shared with the CLI exit codes. */
#define SPDNN_OK 0
#define SPDNN_ERR_UNKNOWN 1
#define SPDNN_ERR_CONFIG 2
#define SPDNN_ERR_NUMERIC 3
#define SPDNN_ERR_CHECK_FAILED 4

/* Message for the last failing call on this thread; valid until the next
 * failing call.  Never NULL. */
const char* spdnn_last_error(void);

const char* spdnn_version(void);
const char* spdnn_revision(void);
const char* spdnn_rng_name(void);

/* Strings returned through char** out-parameters are heap-allocated and must
 * be released with spdnn_string_free. */
void spdnn_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

typedef struct spdnn_model spdnn_model;

int spdnn_model_load(const char* path, spdnn_model** out);
int spdnn_model_from_json(const char* text, spdnn_model** out);
int spdnn_model_save(const spdnn_model* model, const char* path);
int spdnn_model_to_json(const spdnn_model* model, char** out);
/* x has length equal to the model input dimension d. */
int spdnn_model_predict(const spdnn_model* model, const double* x, size_t d,
                        double* out);
int spdnn_model_input_dim(const spdnn_model* model, size_t* out);
int spdnn_model_param_count(const spdnn_model* model, size_t* out);
/* number of parameters with |theta_j| > tol */
int spdnn_model_nonzeros(const spdnn_model* model, double tol, size_t* out);
void spdnn_model_free(spdnn_model* model);

/* ---- datasets -------------------------------------------------------- */

typedef struct spdnn_dataset spdnn_dataset;

int spdnn_dataset_load_csv(const char* path, spdnn_dataset** out);
int spdnn_dataset_save_csv(const spdnn_dataset* data, const char* path);
int spdnn_dataset_size(const spdnn_dataset* data, size_t* out);
int spdnn_dataset_dim(const spdnn_dataset* data, size_t* out);
/* row i: d window values into x, label into y */
int spdnn_dataset_row(const spdnn_dataset* data, size_t i, double* x,
                      double* y);
void spdnn_dataset_free(spdnn_dataset* data);

/* ---- small numeric entry points -------------------------------------- */

/* family is "clipped_l1", "scad", or "mcp"; shape 0 selects the default
 * (3.7 for scad, 3 for mcp). */
int spdnn_prox(const char* family, double lambda, double tau, double shape,
               double x, double eta, double* out);
int spdnn_penalty_value(const char* family, double lambda, double tau,
                        double shape, double x, double* out);

/* effective sample size floor(n / ceil((8n/c)^(1/(gamma+1)))) */
int spdnn_n_alpha(long long n, double c, double gamma, long long* out);

uint64_t spdnn_seed_split(uint64_t seed, uint64_t stream);

/* ---- run-level entry points (JSON config in, files/JSON out) --------- */

/* Simulates a trajectory and writes the dataset CSV to out_csv.
 * config: {"process": {...}, "n": ..., "seed": ...}. */
int spdnn_run_simulate(const char* config_json, int use_seed, uint64_t seed,
                       const char* out_csv);

/* Fits one model.  Writes <out_prefix>.model.json and <out_prefix>.trace.csv;
 * *summary_json (optional) receives a JSON run summary. */
int spdnn_run_train(const char* config_json, int use_seed, uint64_t seed,
                    const char* out_prefix, char** summary_json);

/* Full n-grid experiment.  Writes <out_prefix>.csv and <out_prefix>.json;
 * *summary_json (optional) receives the same JSON summary. */
int spdnn_run_rate_sweep(const char* config_json, int use_seed, uint64_t seed,
                         size_t workers, const char* out_prefix,
                         char** summary_json);

/* Builds the packing-of-bumps construction and checks the separation and
 * budget conditions.  Returns SPDNN_ERR_CHECK_FAILED when a condition fails;
 * the report is produced either way (out_path may be NULL). */
int spdnn_run_verify_lowerbound(const char* config_json, int use_seed,
                                uint64_t seed, const char* out_path,
                                char** report_json);

/* Local-structure probe; returns the fitted exponent report. */
int spdnn_run_a4_probe(const char* config_json, int use_seed, uint64_t seed,
                       const char* out_path, char** report_json);

/* Stability check of exponential-AR coefficients. */
int spdnn_run_stability(const char* config_json, const char* out_path,
                        char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* SPDNN_H */
