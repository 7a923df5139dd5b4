#include "rhythmlab.h"

#include <cstring>
#include <sstream>
#include <string>

#include "core/common.hpp"
#include "core/pipeline.hpp"

using namespace rhythmlab;

namespace {

thread_local std::string t_last_error;

rl_status status_from(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return RL_ERR_INVALID_ARGUMENT;
        case ErrorKind::io: return RL_ERR_IO;
        case ErrorKind::format: return RL_ERR_FORMAT;
        case ErrorKind::validation: return RL_ERR_VALIDATION;
        case ErrorKind::numeric: return RL_ERR_NUMERIC;
        case ErrorKind::unsupported: return RL_ERR_UNSUPPORTED;
        case ErrorKind::internal: return RL_ERR_INTERNAL;
    }
    return RL_ERR_INTERNAL;
}

template <class Fn>
rl_status guarded(Fn&& fn) {
    try {
        fn();
        return RL_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_from(e.kind());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return RL_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return RL_ERR_INTERNAL;
    }
}

rl_status fail_invalid(const char* message) {
    t_last_error = message;
    return RL_ERR_INVALID_ARGUMENT;
}

FeatureConfig to_feature_config(const rl_feature_options* options) {
    FeatureConfig config;
    if (options) {
        config.resample = options->resample != 0;
        config.include_f0 = options->include_f0 != 0;
        config.normalize = options->normalize != 0;
    }
    return config;
}

}  // namespace

struct rl_features {
    FeatureSequence seq;
};

struct rl_model {
    LstmModel model;
};

extern "C" {

const char* rl_version(void) { return "0.1.0"; }

const char* rl_status_name(rl_status status) {
    switch (status) {
        case RL_OK: return "ok";
        case RL_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case RL_ERR_IO: return "io";
        case RL_ERR_FORMAT: return "format";
        case RL_ERR_VALIDATION: return "validation";
        case RL_ERR_NUMERIC: return "numeric";
        case RL_ERR_UNSUPPORTED: return "unsupported";
        case RL_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* rl_last_error(void) { return t_last_error.c_str(); }

void rl_set_logger(rl_log_fn fn, void* user) {
    set_log_sink(reinterpret_cast<LogSink>(fn), user);
}

void rl_feature_options_init(rl_feature_options* options) {
    if (!options) return;
    options->resample = 0;
    options->include_f0 = 0;
    options->normalize = 1;
    options->jobs = 1;
}

rl_status rl_features_extract(const char* wav_path, const rl_feature_options* options,
                              rl_features** out) {
    if (!wav_path || !out) return fail_invalid("wav_path and out must be non-null");
    return guarded([&] {
        auto holder = std::make_unique<rl_features>();
        holder->seq = extract_features_file(wav_path, to_feature_config(options));
        *out = holder.release();
    });
}

rl_status rl_features_open(const char* path, rl_features** out) {
    if (!path || !out) return fail_invalid("path and out must be non-null");
    return guarded([&] {
        auto holder = std::make_unique<rl_features>();
        holder->seq = load_features(path);
        *out = holder.release();
    });
}

rl_status rl_features_save(const rl_features* features, const char* path) {
    if (!features || !path) return fail_invalid("features and path must be non-null");
    return guarded([&] { save_features(features->seq, path); });
}

rl_status rl_features_export_csv(const rl_features* features, const char* path) {
    if (!features || !path) return fail_invalid("features and path must be non-null");
    return guarded([&] { export_features_csv(features->seq, path); });
}

int64_t rl_features_frames(const rl_features* features) {
    return features ? static_cast<int64_t>(features->seq.frames()) : 0;
}

int32_t rl_features_dims(const rl_features* features) {
    return features ? features->seq.dims() : 0;
}

rl_status rl_features_read(const rl_features* features, float* out, size_t capacity) {
    if (!features || !out) return fail_invalid("features and out must be non-null");
    const size_t needed = static_cast<size_t>(features->seq.frames()) *
                          static_cast<size_t>(features->seq.dims());
    if (capacity < needed) return fail_invalid("buffer too small for frames*dims floats");
    return guarded([&] {
        const FeatureSequence& seq = features->seq;
        size_t k = 0;
        for (Eigen::Index t = 0; t < seq.frames(); ++t) {
            for (int c = 0; c < 3; ++c) out[k++] = static_cast<float>(seq.levels(t, c));
            for (int c = 0; c < 3; ++c) out[k++] = static_cast<float>(seq.deltas(t, c));
            if (seq.has_f0()) out[k++] = static_cast<float>(seq.f0(t));
        }
    });
}

void rl_features_free(rl_features* features) { delete features; }

rl_status rl_cache_build(const char* manifest, const char* cache_dir,
                         const rl_feature_options* options) {
    if (!manifest || !cache_dir) return fail_invalid("manifest and cache_dir must be non-null");
    return guarded([&] {
        cmd_build_cache(manifest, cache_dir, to_feature_config(options),
                        options ? options->jobs : 1);
    });
}

rl_status rl_model_open(const char* checkpoint, rl_model** out) {
    if (!checkpoint || !out) return fail_invalid("checkpoint and out must be non-null");
    return guarded([&] {
        auto holder = std::make_unique<rl_model>();
        holder->model = load_checkpoint(checkpoint);
        *out = holder.release();
    });
}

rl_status rl_model_save(const rl_model* model, const char* checkpoint) {
    if (!model || !checkpoint) return fail_invalid("model and checkpoint must be non-null");
    return guarded([&] { save_checkpoint(model->model, checkpoint); });
}

int32_t rl_model_num_languages(const rl_model* model) {
    return model ? model->model.num_labels() : 0;
}

const char* rl_model_language(const rl_model* model, int32_t index) {
    if (!model || index < 0 || index >= model->model.num_labels()) return nullptr;
    return model->model.labels[static_cast<size_t>(index)].c_str();
}

rl_status rl_model_predict(const rl_model* model, const rl_features* features, double* probs,
                           size_t capacity) {
    if (!model || !features || !probs) return fail_invalid("model, features and probs required");
    if (capacity < static_cast<size_t>(model->model.num_labels()))
        return fail_invalid("probs buffer smaller than the number of languages");
    return guarded([&] {
        const ForwardResult fwd = forward(model->model, features->seq, ForwardMode::eval);
        const Eigen::Index last = fwd.probs.rows() - 1;
        for (int i = 0; i < model->model.num_labels(); ++i) probs[i] = fwd.probs(last, i);
    });
}

void rl_model_free(rl_model* model) { delete model; }

void rl_train_options_init(rl_train_options* options) {
    if (!options) return;
    const TrainConfig defaults;
    options->lr0 = defaults.lr0;
    options->lr_decay = defaults.lr_decay;
    options->momentum = defaults.momentum;
    options->tbptt_len = defaults.tbptt_len;
    options->epochs = defaults.epochs;
    options->batch_size = defaults.batch_size;
    options->dropout_recurrent = defaults.dropout.recurrent;
    options->dropout_between = defaults.dropout.between_layers;
    options->dropout_dense = defaults.dropout.dense;
    options->augment = defaults.augment ? 1 : 0;
    options->normalize_weights = defaults.normalize_weights ? 1 : 0;
    options->test_fraction = 0.08;
    options->seed = 0;
    options->log_csv = nullptr;
}

rl_status rl_train(const char* cache_dir, const rl_train_options* options,
                   const char* checkpoint_out) {
    if (!cache_dir || !checkpoint_out)
        return fail_invalid("cache_dir and checkpoint_out must be non-null");
    return guarded([&] {
        rl_train_options defaults;
        rl_train_options_init(&defaults);
        const rl_train_options& o = options ? *options : defaults;
        TrainConfig config;
        config.lr0 = o.lr0;
        config.lr_decay = o.lr_decay;
        config.momentum = o.momentum;
        config.tbptt_len = o.tbptt_len;
        config.epochs = o.epochs;
        config.batch_size = o.batch_size;
        config.dropout.recurrent = o.dropout_recurrent;
        config.dropout.between_layers = o.dropout_between;
        config.dropout.dense = o.dropout_dense;
        config.augment = o.augment != 0;
        config.normalize_weights = o.normalize_weights != 0;
        config.seed = o.seed;
        cmd_train(cache_dir, config, o.test_fraction, checkpoint_out,
                  o.log_csv ? o.log_csv : "");
    });
}

rl_status rl_evaluate(const char* checkpoint, const char* cache_dir, const char* split,
                      double test_fraction, int64_t split_seed, const char* confusion_csv,
                      rl_eval_result* result) {
    if (!checkpoint || !cache_dir || !split)
        return fail_invalid("checkpoint, cache_dir and split must be non-null");
    return guarded([&] {
        const EvalResult r = cmd_evaluate(checkpoint, cache_dir, split, test_fraction, split_seed,
                                          confusion_csv ? confusion_csv : "");
        if (result) {
            result->accuracy = r.accuracy;
            result->top3 = r.top3;
        }
    });
}

rl_status rl_histograms(const char* checkpoint, const char* cache_dir, int per_language,
                        int repeats, uint64_t seed, const char* out_histograms_csv,
                        const char* out_vectors_csv) {
    if (!checkpoint || !cache_dir) return fail_invalid("checkpoint and cache_dir required");
    return guarded([&] {
        cmd_histograms(checkpoint, cache_dir, per_language, repeats, seed,
                       out_histograms_csv ? out_histograms_csv : "",
                       out_vectors_csv ? out_vectors_csv : "");
    });
}

rl_status rl_cluster(const char* histograms_csv, const char* measure, const char* linkage,
                     const char* out_tree_json, const char* out_matrix_csv) {
    if (!histograms_csv || !measure || !linkage || !out_tree_json)
        return fail_invalid("histograms_csv, measure, linkage and out_tree_json required");
    return guarded([&] {
        cmd_cluster(histograms_csv, measure, linkage, out_tree_json,
                    out_matrix_csv ? out_matrix_csv : "");
    });
}

rl_status rl_mds(const char* histograms_csv, const char* measure, int dims, uint64_t seed,
                 const char* out_coords_csv, double* stress_out) {
    if (!histograms_csv || !measure || !out_coords_csv)
        return fail_invalid("histograms_csv, measure and out_coords_csv required");
    return guarded([&] {
        const double stress = cmd_mds(histograms_csv, measure, dims, seed, out_coords_csv);
        if (stress_out) *stress_out = stress;
    });
}

rl_status rl_tsne(const char* vectors_csv, double perplexity, uint64_t seed,
                  const char* out_embedding_csv) {
    if (!vectors_csv || !out_embedding_csv)
        return fail_invalid("vectors_csv and out_embedding_csv required");
    return guarded([&] { cmd_tsne(vectors_csv, perplexity, seed, out_embedding_csv); });
}

rl_status rl_rhythm_metrics(const char* const* segmentation_paths, size_t n_paths,
                            const char* out_csv) {
    if (!segmentation_paths || !out_csv)
        return fail_invalid("segmentation_paths and out_csv required");
    return guarded([&] {
        std::vector<std::string> paths;
        for (size_t i = 0; i < n_paths; ++i) {
            if (!segmentation_paths[i]) throw Error::invalid("null segmentation path");
            paths.emplace_back(segmentation_paths[i]);
        }
        cmd_metrics(paths, out_csv);
    });
}

void rl_correlate_options_init(rl_correlate_options* options) {
    if (!options) return;
    options->layer = 2;
    options->r1 = 0.2;
    options->folds = 7;
    options->seed = 0;
    options->significance = 0.05;
    options->pooled_bonferroni = 0;
}

rl_status rl_correlate(const char* checkpoint, const char* sentences_manifest,
                       const rl_correlate_options* options, const char* out_dir) {
    if (!checkpoint || !sentences_manifest || !out_dir)
        return fail_invalid("checkpoint, sentences_manifest and out_dir required");
    return guarded([&] {
        rl_correlate_options defaults;
        rl_correlate_options_init(&defaults);
        const rl_correlate_options& o = options ? *options : defaults;
        CorrelateCmdOptions cmd;
        cmd.layer = o.layer;
        cmd.r1 = o.r1;
        cmd.folds = o.folds;
        cmd.seed = o.seed;
        cmd.significance = o.significance;
        cmd.pooled_bonferroni = o.pooled_bonferroni != 0;
        cmd_correlate(checkpoint, sentences_manifest, cmd, out_dir);
    });
}

rl_status rl_map_points(const char* points_csv, const char* x_column, const char* y_column,
                        const char* corpus_tag, const char* out_csv, int append) {
    if (!points_csv || !x_column || !y_column || !out_csv)
        return fail_invalid("points_csv, x_column, y_column and out_csv required");
    return guarded([&] {
        cmd_map_points(points_csv, x_column, y_column, corpus_tag ? corpus_tag : "points",
                       out_csv, append != 0);
    });
}

rl_status rl_map_segments(const char* checkpoint, const char* cache_dir,
                          const char* correlate_x_json, const char* correlate_y_json,
                          int per_language, uint64_t seed, const char* corpus_tag,
                          const char* out_csv, int append, const char* out_points_csv) {
    if (!checkpoint || !cache_dir || !correlate_x_json || !correlate_y_json || !out_csv)
        return fail_invalid("checkpoint, cache_dir, correlates and out_csv required");
    return guarded([&] {
        cmd_map_segments(checkpoint, cache_dir, correlate_x_json, correlate_y_json, per_language,
                         seed, corpus_tag ? corpus_tag : "cache", out_csv, append != 0,
                         out_points_csv ? out_points_csv : "");
    });
}

rl_status rl_qda(const char* train_points_csv, const char* feature_columns,
                 const char* test_points_csv, const char* out_model_json,
                 const char* out_predictions_csv, int uniform_priors, rl_qda_result* result) {
    if (!train_points_csv || !feature_columns)
        return fail_invalid("train_points_csv and feature_columns required");
    return guarded([&] {
        std::vector<std::string> columns;
        std::stringstream ss(feature_columns);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) columns.push_back(item);
        }
        const QdaSummary summary =
            cmd_qda(train_points_csv, columns, test_points_csv ? test_points_csv : "",
                    out_model_json ? out_model_json : "",
                    out_predictions_csv ? out_predictions_csv : "", uniform_priors != 0);
        if (result) {
            result->train_accuracy = summary.train_accuracy;
            result->train_top3 = summary.train_top3;
            result->test_accuracy = summary.test_accuracy;
            result->test_top3 = summary.test_top3;
        }
    });
}

void rl_synth_options_init(rl_synth_options* options) {
    if (!options) return;
    options->segments_per_language = 200;
    options->speakers_per_language = 20;
    options->seed = 0;
}

rl_status rl_synth(const char* out_dir, const rl_synth_options* options) {
    if (!out_dir) return fail_invalid("out_dir required");
    return guarded([&] {
        SynthOptions o;
        if (options) {
            o.segments_per_language = options->segments_per_language;
            o.speakers_per_language = options->speakers_per_language;
            o.seed = options->seed;
        }
        cmd_synth(out_dir, o);
    });
}

} /* extern "C" */
