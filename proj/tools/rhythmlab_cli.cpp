// Command-line front end for librhythmlab. Everything goes through the C API
// in rhythmlab.h; this file only parses flags and prints results.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rhythmlab.h"

namespace {

void print_log(int level, const char* message, void*) {
    static const char* names[] = {"debug", "info", "warn", "error"};
    const char* tag = (level >= 0 && level < 4) ? names[level] : "log";
    std::fprintf(level >= 2 ? stderr : stdout, "[%s] %s\n", tag, message);
}

int fail(rl_status status) {
    std::fprintf(stderr, "error (%s): %s\n", rl_status_name(status), rl_last_error());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    rl_set_logger(print_log, nullptr);

    CLI::App app{"rhythmlab - prosody-only language identification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read defaults from an INI/TOML file (flags win)");

    uint64_t seed = 0;
    app.add_option("--seed", seed, "Seed for every stochastic step")->capture_default_str();

    std::string default_cache;
    if (const char* env = std::getenv("RHYTHMLAB_CACHE")) default_cache = env;

    // features
    auto* features = app.add_subcommand("features", "Build a segment feature cache from a manifest");
    std::string manifest, cache_dir = default_cache;
    rl_feature_options fopts;
    rl_feature_options_init(&fopts);
    bool resample = false, with_f0 = false;
    int jobs = 1;
    features->add_option("--manifest", manifest, "JSON Lines manifest")->required();
    features->add_option("--cache-dir", cache_dir, "Output cache directory")
        ->required(default_cache.empty());
    features->add_flag("--resample", resample, "Resample non-16 kHz input");
    features->add_flag("--with-f0", with_f0, "Store the f0 track as a 7th column");
    features->add_option("--jobs", jobs, "Parallel extraction workers");

    // single-file extraction (handy for inspection)
    auto* extract = app.add_subcommand("extract", "Extract features for one WAV file");
    std::string wav_in, rfe_out, csv_out;
    extract->add_option("wav", wav_in, "Input WAV file")->required();
    extract->add_option("--out", rfe_out, "Output RFE1 feature file");
    extract->add_option("--csv", csv_out, "Output CSV file");
    extract->add_flag("--resample", resample, "Resample non-16 kHz input");
    extract->add_flag("--with-f0", with_f0, "Include the f0 track");

    // train
    auto* train = app.add_subcommand("train", "Train the language identifier on a cache");
    rl_train_options topts;
    rl_train_options_init(&topts);
    std::string checkpoint, log_csv;
    train->add_option("--cache-dir", cache_dir, "Segment cache")->required(default_cache.empty());
    train->add_option("--checkpoint", checkpoint, "Output checkpoint")->required();
    train->add_option("--epochs", topts.epochs, "Training epochs")->capture_default_str();
    train->add_option("--batch-size", topts.batch_size, "Segments per batch")->capture_default_str();
    train->add_option("--lr", topts.lr0, "Initial learning rate")->capture_default_str();
    train->add_option("--lr-decay", topts.lr_decay, "Per-epoch decay factor")->capture_default_str();
    train->add_option("--momentum", topts.momentum, "Nesterov momentum")->capture_default_str();
    train->add_option("--tbptt", topts.tbptt_len, "Truncation length in steps")->capture_default_str();
    train->add_option("--dropout-recurrent", topts.dropout_recurrent)->capture_default_str();
    train->add_option("--dropout-between", topts.dropout_between)->capture_default_str();
    train->add_option("--dropout-dense", topts.dropout_dense)->capture_default_str();
    train->add_option("--test-fraction", topts.test_fraction, "Speaker-disjoint test share")
        ->capture_default_str();
    bool no_augment = false, no_weight_norm = false;
    train->add_flag("--no-augment", no_augment, "Disable input distortion");
    train->add_flag("--no-weight-norm", no_weight_norm, "Keep raw sample weights");
    train->add_option("--log-csv", log_csv, "Per-epoch log CSV");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a cache");
    std::string split = "test", confusion_csv;
    double eval_fraction = -1.0;
    int64_t eval_seed = -1;
    eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    eval->add_option("--cache-dir", cache_dir, "Segment cache")->required(default_cache.empty());
    eval->add_option("--split", split, "train|test|all")->capture_default_str();
    eval->add_option("--test-fraction", eval_fraction, "Override the recorded split fraction");
    eval->add_option("--split-seed", eval_seed, "Override the recorded split seed");
    eval->add_option("--confusion", confusion_csv, "Row-normalized confusion matrix CSV");

    // histograms
    auto* histograms = app.add_subcommand("histograms",
                                          "Language histograms from a balanced segment set");
    int per_language = 0, repeats = 1;
    std::string out_histograms, out_vectors;
    histograms->add_option("--checkpoint", checkpoint)->required();
    histograms->add_option("--cache-dir", cache_dir)->required(default_cache.empty());
    histograms->add_option("--per-language", per_language,
                           "Recordings per language (0 = largest balanced set)");
    histograms->add_option("--repeats", repeats, "Dropout samples averaged per recording")
        ->capture_default_str();
    histograms->add_option("--out", out_histograms, "Histogram CSV")->required();
    histograms->add_option("--out-vectors", out_vectors, "Per-recording output vectors CSV");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "Hierarchical clustering of language histograms");
    std::string histograms_csv, measure = "bhattacharyya", linkage = "complete";
    std::string out_tree, out_matrix;
    cluster->add_option("--histograms", histograms_csv, "Histogram CSV")->required();
    cluster->add_option("--measure", measure, "hellinger|bhattacharyya")->capture_default_str();
    cluster->add_option("--linkage", linkage, "complete|average|single")->capture_default_str();
    cluster->add_option("--out", out_tree, "Dendrogram JSON")->required();
    cluster->add_option("--out-matrix", out_matrix, "Dissimilarity matrix CSV");

    // mds
    auto* mds = app.add_subcommand("mds", "Metric MDS of language histograms");
    std::string out_coords;
    int dims = 2;
    mds->add_option("--histograms", histograms_csv, "Histogram CSV")->required();
    mds->add_option("--measure", measure, "hellinger|bhattacharyya")->capture_default_str();
    mds->add_option("--dims", dims, "Embedding dimensions")->capture_default_str();
    mds->add_option("--out", out_coords, "Coordinates CSV")->required();

    // tsne
    auto* tsne = app.add_subcommand("tsne", "t-SNE embedding of per-recording output vectors");
    std::string vectors_csv, out_embedding;
    double perplexity = 0.0;
    tsne->add_option("--vectors", vectors_csv, "Per-recording vectors CSV")->required();
    tsne->add_option("--perplexity", perplexity, "0 = points per class");
    tsne->add_option("--out", out_embedding, "Embedding CSV")->required();

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Rhythm metrics for CV segmentation files");
    std::vector<std::string> segmentation_files;
    std::string metrics_csv;
    metrics->add_option("files", segmentation_files, "Segmentation text files")->required();
    metrics->add_option("--out", metrics_csv, "Metric CSV")->required();

    // correlate
    auto* correlate = app.add_subcommand("correlate",
                                         "Single-cell correlations and ElasticNet correlates");
    rl_correlate_options copts;
    rl_correlate_options_init(&copts);
    std::string sentences, out_dir;
    bool pooled = false;
    correlate->add_option("--checkpoint", checkpoint)->required();
    correlate->add_option("--sentences", sentences, "Sentence manifest (audio+segmentation)")
        ->required();
    correlate->add_option("--layer", copts.layer, "Hidden layer (1 or 2)")->capture_default_str();
    correlate->add_option("--r1", copts.r1, "ElasticNet L1 ratio")->capture_default_str();
    correlate->add_option("--folds", copts.folds, "Cross-validation folds")->capture_default_str();
    correlate->add_option("--significance", copts.significance, "Bonferroni base level")
        ->capture_default_str();
    correlate->add_flag("--pooled-bonferroni", pooled, "Correct across both layers");
    correlate->add_option("--out-dir", out_dir, "Output directory")->required();

    // map
    auto* map_cmd = app.add_subcommand("map", "Per-language maps in correlate space");
    std::string points_csv, x_column, y_column, corpus_tag = "points", map_out;
    std::string correlate_x, correlate_y, out_points;
    bool append = false;
    int map_per_language = 0;
    map_cmd->add_option("--points", points_csv, "Points CSV (from correlate projections)");
    map_cmd->add_option("--x", x_column, "X column in the points CSV");
    map_cmd->add_option("--y", y_column, "Y column in the points CSV");
    map_cmd->add_option("--checkpoint", checkpoint, "Checkpoint (cache mode)");
    map_cmd->add_option("--cache-dir", cache_dir, "Segment cache (cache mode)");
    map_cmd->add_option("--correlate-x", correlate_x, "Correlate JSON for the x axis");
    map_cmd->add_option("--correlate-y", correlate_y, "Correlate JSON for the y axis");
    map_cmd->add_option("--per-language", map_per_language, "Segments per language (0 = all)");
    map_cmd->add_option("--tag", corpus_tag, "Corpus tag column")->capture_default_str();
    map_cmd->add_flag("--append", append, "Append to an existing map CSV");
    map_cmd->add_option("--out", map_out, "Map CSV")->required();
    map_cmd->add_option("--out-points", out_points, "Per-segment projections CSV (cache mode)");

    // qda
    auto* qda = app.add_subcommand("qda", "Quadratic discriminant analysis in correlate space");
    std::string qda_train, qda_test, qda_columns, qda_model_out, qda_pred_out;
    bool uniform_priors = false;
    qda->add_option("--train", qda_train, "Training points CSV")->required();
    qda->add_option("--columns", qda_columns, "Comma-separated feature columns")->required();
    qda->add_option("--test", qda_test, "Held-out points CSV");
    qda->add_option("--out-model", qda_model_out, "Model JSON");
    qda->add_option("--out-pred", qda_pred_out, "Training predictions CSV");
    qda->add_flag("--uniform-priors", uniform_priors, "Uniform instead of empirical priors");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the synthetic three-language corpus");
    rl_synth_options sopts;
    rl_synth_options_init(&sopts);
    std::string synth_dir;
    synth->add_option("--out-dir", synth_dir, "Output directory")->required();
    synth->add_option("--segments-per-language", sopts.segments_per_language)
        ->capture_default_str();
    synth->add_option("--speakers", sopts.speakers_per_language, "Speakers per language")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    rl_status status = RL_OK;

    if (features->parsed()) {
        fopts.resample = resample;
        fopts.include_f0 = with_f0;
        fopts.jobs = jobs;
        status = rl_cache_build(manifest.c_str(), cache_dir.c_str(), &fopts);
    } else if (extract->parsed()) {
        fopts.resample = resample;
        fopts.include_f0 = with_f0;
        rl_features* feats = nullptr;
        status = rl_features_extract(wav_in.c_str(), &fopts, &feats);
        if (status == RL_OK) {
            std::printf("%" PRId64 " frames x %d dims\n", rl_features_frames(feats),
                        rl_features_dims(feats));
            if (!rfe_out.empty()) status = rl_features_save(feats, rfe_out.c_str());
            if (status == RL_OK && !csv_out.empty())
                status = rl_features_export_csv(feats, csv_out.c_str());
            rl_features_free(feats);
        }
    } else if (train->parsed()) {
        topts.seed = seed;
        topts.augment = no_augment ? 0 : 1;
        topts.normalize_weights = no_weight_norm ? 0 : 1;
        topts.log_csv = log_csv.empty() ? nullptr : log_csv.c_str();
        status = rl_train(cache_dir.c_str(), &topts, checkpoint.c_str());
    } else if (eval->parsed()) {
        rl_eval_result result{};
        status = rl_evaluate(checkpoint.c_str(), cache_dir.c_str(), split.c_str(), eval_fraction,
                             eval_seed, confusion_csv.empty() ? nullptr : confusion_csv.c_str(),
                             &result);
        if (status == RL_OK)
            std::printf("accuracy %.4f top3 %.4f\n", result.accuracy, result.top3);
    } else if (histograms->parsed()) {
        status = rl_histograms(checkpoint.c_str(), cache_dir.c_str(), per_language, repeats, seed,
                               out_histograms.c_str(),
                               out_vectors.empty() ? nullptr : out_vectors.c_str());
    } else if (cluster->parsed()) {
        status = rl_cluster(histograms_csv.c_str(), measure.c_str(), linkage.c_str(),
                            out_tree.c_str(), out_matrix.empty() ? nullptr : out_matrix.c_str());
    } else if (mds->parsed()) {
        double stress = 0.0;
        status = rl_mds(histograms_csv.c_str(), measure.c_str(), dims, seed, out_coords.c_str(),
                        &stress);
        if (status == RL_OK) std::printf("stress %.4f\n", stress);
    } else if (tsne->parsed()) {
        status = rl_tsne(vectors_csv.c_str(), perplexity, seed, out_embedding.c_str());
    } else if (metrics->parsed()) {
        std::vector<const char*> paths;
        for (const std::string& p : segmentation_files) paths.push_back(p.c_str());
        status = rl_rhythm_metrics(paths.data(), paths.size(), metrics_csv.c_str());
    } else if (correlate->parsed()) {
        copts.seed = seed;
        copts.pooled_bonferroni = pooled ? 1 : 0;
        status = rl_correlate(checkpoint.c_str(), sentences.c_str(), &copts, out_dir.c_str());
    } else if (map_cmd->parsed()) {
        const bool points_mode = !points_csv.empty();
        const bool cache_mode = !correlate_x.empty() && !correlate_y.empty() &&
                                !checkpoint.empty() && !cache_dir.empty();
        if (points_mode) {
            if (x_column.empty() || y_column.empty()) {
                std::fprintf(stderr, "map --points requires --x and --y columns\n");
                return 1;
            }
            status = rl_map_points(points_csv.c_str(), x_column.c_str(), y_column.c_str(),
                                   corpus_tag.c_str(), map_out.c_str(), append ? 1 : 0);
        } else if (cache_mode) {
            status = rl_map_segments(checkpoint.c_str(), cache_dir.c_str(), correlate_x.c_str(),
                                     correlate_y.c_str(), map_per_language, seed,
                                     corpus_tag.c_str(), map_out.c_str(), append ? 1 : 0,
                                     out_points.empty() ? nullptr : out_points.c_str());
        } else {
            std::fprintf(stderr,
                         "map needs either --points/--x/--y or "
                         "--checkpoint/--cache-dir/--correlate-x/--correlate-y\n");
            return 1;
        }
    } else if (qda->parsed()) {
        rl_qda_result result{};
        status = rl_qda(qda_train.c_str(), qda_columns.c_str(),
                        qda_test.empty() ? nullptr : qda_test.c_str(),
                        qda_model_out.empty() ? nullptr : qda_model_out.c_str(),
                        qda_pred_out.empty() ? nullptr : qda_pred_out.c_str(),
                        uniform_priors ? 1 : 0, &result);
        if (status == RL_OK) {
            std::printf("train accuracy %.4f top3 %.4f\n", result.train_accuracy,
                        result.train_top3);
            if (result.test_accuracy >= 0.0)
                std::printf("test accuracy %.4f top3 %.4f\n", result.test_accuracy,
                            result.test_top3);
        }
    } else if (synth->parsed()) {
        sopts.seed = seed;
        status = rl_synth(synth_dir.c_str(), &sopts);
    }

    return status == RL_OK ? 0 : fail(status);
}
