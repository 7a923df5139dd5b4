/*
 * rhythmlab - prosody-only spoken language identification toolkit.
 *
 * C interface to the shared library. All functions return RL_OK on success;
 * on failure they return an error code and leave a human-readable message
 * retrievable with rl_last_error() (thread-local). Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function.
 */
#ifndef RHYTHMLAB_H
#define RHYTHMLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define RL_API
#elif defined(RL_BUILD_SHARED)
#  define RL_API __attribute__((visibility("default")))
#else
#  define RL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
    RL_OK = 0,
    RL_ERR_INVALID_ARGUMENT = 1,
    RL_ERR_IO = 2,
    RL_ERR_FORMAT = 3,
    RL_ERR_VALIDATION = 4,
    RL_ERR_NUMERIC = 5,
    RL_ERR_UNSUPPORTED = 6,
    RL_ERR_INTERNAL = 7
} rl_status;

RL_API const char* rl_version(void);
RL_API const char* rl_status_name(rl_status status);
RL_API const char* rl_last_error(void);

/* Log levels: 0 debug, 1 info, 2 warning, 3 error. Pass NULL to reset. */
typedef void (*rl_log_fn)(int level, const char* message, void* user);
RL_API void rl_set_logger(rl_log_fn fn, void* user);

/* ---- feature extraction ---------------------------------------------- */

typedef struct rl_feature_options {
    int resample;    /* accept non-16 kHz input and resample */
    int include_f0;  /* append the f0 track as a 7th column */
    int normalize;   /* per-recording RMS normalization */
    int jobs;        /* worker threads for cache building */
} rl_feature_options;

RL_API void rl_feature_options_init(rl_feature_options* options);

typedef struct rl_features rl_features; /* opaque */

RL_API rl_status rl_features_extract(const char* wav_path, const rl_feature_options* options,
                                     rl_features** out);
RL_API rl_status rl_features_open(const char* path, rl_features** out);
RL_API rl_status rl_features_save(const rl_features* features, const char* path);
RL_API rl_status rl_features_export_csv(const rl_features* features, const char* path);
RL_API int64_t rl_features_frames(const rl_features* features);
RL_API int32_t rl_features_dims(const rl_features* features);
/* Copies row-major frame data; capacity in floats must be frames*dims. */
RL_API rl_status rl_features_read(const rl_features* features, float* out, size_t capacity);
RL_API void rl_features_free(rl_features* features);

/* manifest (JSON Lines: path, language, speaker_id, source) -> RFE1 cache */
RL_API rl_status rl_cache_build(const char* manifest, const char* cache_dir,
                                const rl_feature_options* options);

/* ---- model ------------------------------------------------------------ */

typedef struct rl_model rl_model; /* opaque */

RL_API rl_status rl_model_open(const char* checkpoint, rl_model** out);
RL_API rl_status rl_model_save(const rl_model* model, const char* checkpoint);
RL_API int32_t rl_model_num_languages(const rl_model* model);
RL_API const char* rl_model_language(const rl_model* model, int32_t index);
/* Final-step output distribution; probs must hold num_languages doubles. */
RL_API rl_status rl_model_predict(const rl_model* model, const rl_features* features,
                                  double* probs, size_t capacity);
RL_API void rl_model_free(rl_model* model);

/* ---- training and evaluation ------------------------------------------ */

typedef struct rl_train_options {
    double lr0;
    double lr_decay;
    double momentum;
    int tbptt_len;
    int epochs;
    int batch_size;
    double dropout_recurrent;
    double dropout_between;
    double dropout_dense;
    int augment;
    int normalize_weights;
    double test_fraction;
    uint64_t seed;
    const char* log_csv; /* optional per-epoch log, NULL to skip */
} rl_train_options;

RL_API void rl_train_options_init(rl_train_options* options);
RL_API rl_status rl_train(const char* cache_dir, const rl_train_options* options,
                          const char* checkpoint_out);

typedef struct rl_eval_result {
    double accuracy;
    double top3;
} rl_eval_result;

/* split: "train", "test" or "all"; test_fraction/split_seed < 0 reuse the
 * values recorded in the checkpoint. */
RL_API rl_status rl_evaluate(const char* checkpoint, const char* cache_dir, const char* split,
                             double test_fraction, int64_t split_seed, const char* confusion_csv,
                             rl_eval_result* result);

/* ---- representation analysis ------------------------------------------ */

RL_API rl_status rl_histograms(const char* checkpoint, const char* cache_dir, int per_language,
                               int repeats, uint64_t seed, const char* out_histograms_csv,
                               const char* out_vectors_csv);
RL_API rl_status rl_cluster(const char* histograms_csv, const char* measure, const char* linkage,
                            const char* out_tree_json, const char* out_matrix_csv);
RL_API rl_status rl_mds(const char* histograms_csv, const char* measure, int dims, uint64_t seed,
                        const char* out_coords_csv, double* stress_out);
RL_API rl_status rl_tsne(const char* vectors_csv, double perplexity, uint64_t seed,
                         const char* out_embedding_csv);

/* ---- rhythm metrics and correlates ------------------------------------- */

RL_API rl_status rl_rhythm_metrics(const char* const* segmentation_paths, size_t n_paths,
                                   const char* out_csv);

typedef struct rl_correlate_options {
    int layer;            /* 1 or 2 */
    double r1;            /* L1 mixing ratio */
    int folds;
    uint64_t seed;
    double significance;  /* Bonferroni base level */
    int pooled_bonferroni;
} rl_correlate_options;

RL_API void rl_correlate_options_init(rl_correlate_options* options);
RL_API rl_status rl_correlate(const char* checkpoint, const char* sentences_manifest,
                              const rl_correlate_options* options, const char* out_dir);

RL_API rl_status rl_map_points(const char* points_csv, const char* x_column, const char* y_column,
                               const char* corpus_tag, const char* out_csv, int append);
RL_API rl_status rl_map_segments(const char* checkpoint, const char* cache_dir,
                                 const char* correlate_x_json, const char* correlate_y_json,
                                 int per_language, uint64_t seed, const char* corpus_tag,
                                 const char* out_csv, int append, const char* out_points_csv);

typedef struct rl_qda_result {
    double train_accuracy;
    double train_top3;
    double test_accuracy; /* -1 when no test csv was given */
    double test_top3;
} rl_qda_result;

/* feature_columns: comma-separated column names from the points csv. */
RL_API rl_status rl_qda(const char* train_points_csv, const char* feature_columns,
                        const char* test_points_csv, const char* out_model_json,
                        const char* out_predictions_csv, int uniform_priors,
                        rl_qda_result* result);

/* ---- synthetic corpus --------------------------------------------------- */

typedef struct rl_synth_options {
    int segments_per_language;
    int speakers_per_language;
    uint64_t seed;
} rl_synth_options;

RL_API void rl_synth_options_init(rl_synth_options* options);
RL_API rl_status rl_synth(const char* out_dir, const rl_synth_options* options);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RHYTHMLAB_H */
