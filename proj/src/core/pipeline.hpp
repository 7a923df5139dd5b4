#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/cluster.hpp"
#include "core/correlates.hpp"
#include "core/corpus.hpp"
#include "core/mds.hpp"
#include "core/qda.hpp"
#include "core/synth.hpp"
#include "core/trainer.hpp"
#include "core/tsne.hpp"

namespace rhythmlab {

// manifest -> segment feature cache (RFE1 files + index.json)
struct CacheSummary {
    size_t segments = 0;
    size_t failed_files = 0;
};
CacheSummary cmd_build_cache(const std::string& manifest, const std::string& cache_dir,
                             const FeatureConfig& config, int jobs);

// cache -> trained checkpoint; the speaker-disjoint split and sample weights
// are derived inside. Returns the per-epoch log.
std::vector<EpochLog> cmd_train(const std::string& cache_dir, const TrainConfig& config,
                                double test_fraction, const std::string& checkpoint_out,
                                const std::string& log_csv = "");

// split: "train", "test" or "all". test_fraction/split_seed < 0 pull the
// values recorded in the checkpoint.
EvalResult cmd_evaluate(const std::string& checkpoint, const std::string& cache_dir,
                        const std::string& split, double test_fraction, int64_t split_seed,
                        const std::string& confusion_csv = "");

void cmd_histograms(const std::string& checkpoint, const std::string& cache_dir, int per_language,
                    int repeats, uint64_t seed, const std::string& out_histograms,
                    const std::string& out_vectors);

void cmd_cluster(const std::string& histograms_csv, const std::string& measure,
                 const std::string& linkage, const std::string& out_tree,
                 const std::string& out_matrix = "");

double cmd_mds(const std::string& histograms_csv, const std::string& measure, int dims,
               uint64_t seed, const std::string& out_coords);

void cmd_tsne(const std::string& vectors_csv, double perplexity, uint64_t seed,
              const std::string& out_embedding);

void cmd_metrics(const std::vector<std::string>& segmentation_paths, const std::string& out_csv);

struct CorrelateCmdOptions {
    int layer = 2;
    double r1 = 0.2;
    int folds = 7;
    uint64_t seed = 0;
    double significance = 0.05;
    bool pooled_bonferroni = false;  // correct across both layers
};

// Sentence manifest (JSONL: audio, segmentation, language?, id?) -> single
// cell correlations, one ElasticNet correlate per metric, and per-sentence
// projections, written under out_dir.
void cmd_correlate(const std::string& checkpoint, const std::string& sentences_manifest,
                   const CorrelateCmdOptions& options, const std::string& out_dir);

// Per-language map from a points CSV (id,language,columns...).
void cmd_map_points(const std::string& points_csv, const std::string& x_column,
                    const std::string& y_column, const std::string& corpus_tag,
                    const std::string& out_csv, bool append);

// Per-language map from cache segments projected through two correlates.
void cmd_map_segments(const std::string& checkpoint, const std::string& cache_dir,
                      const std::string& correlate_x_json, const std::string& correlate_y_json,
                      int per_language, uint64_t seed, const std::string& corpus_tag,
                      const std::string& out_csv, bool append,
                      const std::string& out_points_csv = "");

struct QdaSummary {
    double train_accuracy = 0.0, train_top3 = 0.0;
    double test_accuracy = -1.0, test_top3 = -1.0;  // -1 when no test set given
};

QdaSummary cmd_qda(const std::string& train_points_csv,
                   const std::vector<std::string>& feature_columns,
                   const std::string& test_points_csv, const std::string& out_model_json,
                   const std::string& out_predictions_csv, bool uniform_priors);

SynthResult cmd_synth(const std::string& out_dir, const SynthOptions& options);

// Sentence manifest loader shared by correlate/map.
struct SentenceSet {
    std::vector<SentenceInput> sentences;
};
SentenceSet load_sentences(const std::string& manifest_path, const FeatureConfig& config = {});

struct PointsTable {
    std::vector<std::string> ids, languages, columns;
    Eigen::MatrixXd values;

    int column_index(const std::string& name) const;
};
PointsTable load_points_csv(const std::string& path);

}  // namespace rhythmlab
