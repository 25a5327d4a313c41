/* escare.h - C interface to the escare tail-risk library.
 *
 * All functions return esc_status; on failure esc_last_error() holds a
 * message for the calling thread. Objects returned through out-parameters are
 * owned by the caller and released with the matching _free function.
 */
#ifndef ESCARE_ESCARE_H
#define ESCARE_ESCARE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ESCARE_API __declspec(dllexport)
#else
#define ESCARE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum esc_status {
  ESC_OK = 0,
  ESC_ERR_VALIDATION = 1, /* bad inputs, unparsable files, contract violations */
  ESC_ERR_NUMERICAL = 2   /* estimation / linear algebra failures */
} esc_status;

ESCARE_API const char* esc_version(void);
ESCARE_API const char* esc_last_error(void);

/* ---- daily series ---- */

typedef struct esc_series esc_series;

ESCARE_API esc_status esc_series_load(const char* path, esc_series** out);
ESCARE_API void esc_series_free(esc_series* s);
ESCARE_API size_t esc_series_size(const esc_series* s);
ESCARE_API const double* esc_series_returns(const esc_series* s);
/* NULL when the measure column is absent */
ESCARE_API const double* esc_series_measure(const esc_series* s, const char* id);

/* ---- simulation ---- */

/* Writes rep CSV files (returns schema: date,return,x,sqrt_h) named
 * sim_model<model>_rep<k>.csv under out_dir. */
ESCARE_API esc_status esc_simulate(int model, size_t n, size_t reps, uint64_t seed,
                                   const char* out_dir);

/* ---- realized measures ---- */

/* kind: rv | rr | scrv | scrr | ssrv | ssrr. base_minutes is the bar grid of
 * the intraday file; q is the scaling lookback. Output csv: date,<kind>. */
ESCARE_API esc_status esc_compute_measures(const char* intraday_csv, const char* kind,
                                           int interval_minutes, int base_minutes, int q,
                                           const char* out_csv);

/* ---- estimation ---- */

typedef struct esc_fit esc_fit;

/* spec_json: {"family":"re-es-care","alpha":0.01,"measure":"x",
 *             "constraints":{"delta2":[-0.5,0.5]}}  (constraints optional)
 * method: "ml" | "mcmc"; config_json may be "" for defaults. */
ESCARE_API esc_status esc_fit_series(const esc_series* s, const char* spec_json,
                                     const char* method, const char* config_json, esc_fit** out);
ESCARE_API void esc_fit_free(esc_fit* f);
/* Named parameters plus convergence diagnostics as a JSON document. */
ESCARE_API const char* esc_fit_params_json(const esc_fit* f);
/* One-step-ahead VaR/ES from the fitted parameters applied to `s`. */
ESCARE_API esc_status esc_fit_forecast(const esc_fit* f, const esc_series* s, double* var_out,
                                       double* es_out);

/* Rolling one-step-ahead forecasts written as date,model,alpha,var,es. */
ESCARE_API esc_status esc_rolling_forecast(const esc_series* s, const char* spec_json,
                                           const char* method, const char* config_json,
                                           size_t window_n, size_t refit_every, int threads,
                                           const char* out_csv);

/* ---- evaluation ---- */

/* loss: "fz" | "quantile". Writes the per-day loss CSV when out_csv is not
 * NULL and stores the unnormalized total in *total_out. */
ESCARE_API esc_status esc_score(const char* returns_csv, const char* forecast_csv,
                                const char* loss, double alpha, const char* out_csv,
                                double* total_out);

/* tests_csv: comma list from uc,cc,dq1,dq4,vqr (empty = all). JSON report. */
ESCARE_API esc_status esc_backtest(const char* returns_csv, const char* forecast_csv,
                                   double alpha, const char* tests_csv, const char* out_json);

/* losses_csv header: date,model1,model2,...; one per-day loss row per date. */
ESCARE_API esc_status esc_mcs(const char* losses_csv, double level, int bootstrap_b,
                              int block_length, uint64_t seed, const char* out_json);

/* Parallel arrays of returns CSVs and forecast directories, one per series. */
ESCARE_API esc_status esc_report(const char* const* returns_csvs,
                                 const char* const* forecast_dirs, size_t n_series, double alpha,
                                 const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* ESCARE_ESCARE_H */
