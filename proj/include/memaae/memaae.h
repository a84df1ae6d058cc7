/*
 * C interface to the memaae library: memory-augmented adversarial
 * autoencoder anomaly detection for multivariate time series.
 *
 * Every object is an opaque handle released with its matching _free call.
 * Functions return MEMAAE_OK or an error status; the message for the most
 * recent failure on the calling thread is available from memaae_last_error().
 */
#ifndef MEMAAE_H
#define MEMAAE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(MEMAAE_BUILDING_LIBRARY)
#define MEMAAE_API __attribute__((visibility("default")))
#else
#define MEMAAE_API
#endif

typedef enum memaae_status {
    MEMAAE_OK = 0,
    MEMAAE_ERR_ARGUMENT = 1,
    MEMAAE_ERR_CONFIG = 2,
    MEMAAE_ERR_PARSE = 3,
    MEMAAE_ERR_IO = 4,
    MEMAAE_ERR_SHAPE = 5,
    MEMAAE_ERR_DOMAIN = 6,
    MEMAAE_ERR_CHECKPOINT = 7,
    MEMAAE_ERR_NUMERIC = 8,
    MEMAAE_ERR_INTERNAL = 9
} memaae_status;

typedef struct memaae_series memaae_series;
typedef struct memaae_config memaae_config;
typedef struct memaae_model memaae_model;
typedef struct memaae_scores memaae_scores;

typedef struct memaae_report {
    double precision;
    double recall;
    double f1;
    double threshold; /* +inf when the best choice flags nothing */
    uint64_t tp;
    uint64_t fp;
    uint64_t fn;
    uint64_t tn;
    int truth_has_anomalies;
} memaae_report;

typedef struct memaae_epoch_stats {
    size_t epoch; /* 1-based */
    double rec;
    double adv_d;
    double adv_g;
    double pred_fwd;
    double pred_back;
    double full;
    double seconds;
} memaae_epoch_stats;

typedef void (*memaae_epoch_callback)(const memaae_epoch_stats* stats, void* user);

MEMAAE_API const char* memaae_version(void);
MEMAAE_API const char* memaae_last_error(void);
MEMAAE_API const char* memaae_status_name(memaae_status status);

/* ---- series --------------------------------------------------------------- */

/* label_column may be NULL for unlabeled data. */
MEMAAE_API memaae_status memaae_series_load_csv(const char* path, const char* label_column, memaae_series** out);
/* values: n x k row-major; labels: n entries of 0/1 or NULL. */
MEMAAE_API memaae_status memaae_series_from_values(const double* values, size_t n, size_t k, const uint8_t* labels,
                                                   memaae_series** out);
MEMAAE_API void memaae_series_free(memaae_series* series);
MEMAAE_API size_t memaae_series_rows(const memaae_series* series);
MEMAAE_API size_t memaae_series_cols(const memaae_series* series);
MEMAAE_API int memaae_series_has_labels(const memaae_series* series);
MEMAAE_API memaae_status memaae_series_copy_values(const memaae_series* series, double* dst, size_t capacity);
MEMAAE_API memaae_status memaae_series_copy_labels(const memaae_series* series, uint8_t* dst, size_t capacity);
/* Writes the header, values and (when present) a "label" column. */
MEMAAE_API memaae_status memaae_series_write_csv(const memaae_series* series, const char* path);

/* ---- synthetic benchmark -------------------------------------------------- */

/* spec_text: anomaly segments, one "kind start length [magnitude]" per line,
 * positions relative to the test part. NULL selects the default layout. */
MEMAAE_API memaae_status memaae_synth_pair(uint64_t seed, size_t n_train, size_t n_test, size_t n_vars,
                                           const char* spec_text, memaae_series** train, memaae_series** test);
/* Default anomaly layout for a test series of n_test points, in spec text form. */
MEMAAE_API memaae_status memaae_default_spec(size_t n_test, char* buf, size_t capacity, size_t* needed);

/* ---- configuration -------------------------------------------------------- */

MEMAAE_API memaae_status memaae_config_new(memaae_config** out);
MEMAAE_API memaae_status memaae_config_load(const char* path, memaae_config** out);
MEMAAE_API memaae_status memaae_config_clone(const memaae_config* config, memaae_config** out);
MEMAAE_API void memaae_config_free(memaae_config* config);
MEMAAE_API memaae_status memaae_config_set(memaae_config* config, const char* key, const char* value);
/* String getters copy up to capacity bytes (NUL-terminated) and report the
 * full size including the terminator in *needed (may be NULL). */
MEMAAE_API memaae_status memaae_config_get(const memaae_config* config, const char* key, char* buf, size_t capacity,
                                           size_t* needed);
MEMAAE_API memaae_status memaae_config_to_string(const memaae_config* config, char* buf, size_t capacity,
                                                 size_t* needed);

/* ---- training and checkpoints -------------------------------------------- */

/* Fits normalization on train_raw, windows it and trains a fresh model. The
 * variable count is taken from the data. callback may be NULL. */
MEMAAE_API memaae_status memaae_train(const memaae_config* config, const memaae_series* train_raw,
                                      memaae_epoch_callback callback, void* user, memaae_model** out);
MEMAAE_API memaae_status memaae_model_save(const memaae_model* model, const char* path);
MEMAAE_API memaae_status memaae_model_load(const char* path, memaae_model** out);
MEMAAE_API memaae_status memaae_model_config(const memaae_model* model, memaae_config** out);
MEMAAE_API void memaae_model_free(memaae_model* model);

/* ---- scoring and evaluation ----------------------------------------------- */

/* Normalizes test_raw with the model's training stats and scores it. */
MEMAAE_API memaae_status memaae_score(const memaae_model* model, const memaae_series* test_raw, memaae_scores** out);
MEMAAE_API void memaae_scores_free(memaae_scores* scores);
MEMAAE_API size_t memaae_scores_count(const memaae_scores* scores);
MEMAAE_API size_t memaae_scores_first_index(const memaae_scores* scores);
/* Any destination may be NULL. Undefined terms are NaN. */
MEMAAE_API memaae_status memaae_scores_copy(const memaae_scores* scores, double* score, double* rec, double* pred_fwd,
                                            double* pred_back, size_t capacity);
MEMAAE_API memaae_status memaae_scores_write_csv(const memaae_scores* scores, const char* path);

/* Point-adjusted best F1 of the scores against the series labels. Points with
 * exclude[t] != 0 (t indexes the full series; exclude may be NULL) are dropped
 * from both sides before the search. */
MEMAAE_API memaae_status memaae_evaluate(const memaae_scores* scores, const memaae_series* labeled,
                                         const uint8_t* exclude, memaae_report* out);
MEMAAE_API memaae_status memaae_best_f1(const double* scores, const uint8_t* truth, size_t n, memaae_report* out);
MEMAAE_API memaae_status memaae_point_adjust(const uint8_t* pred, const uint8_t* truth, size_t n, uint8_t* out);

#ifdef __cplusplus
}
#endif

#endif /* MEMAAE_H */
