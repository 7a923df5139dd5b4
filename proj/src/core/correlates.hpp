#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "core/elastic_net.hpp"
#include "core/lstm.hpp"
#include "core/rhythm.hpp"

namespace rhythmlab {

// One row per sentence: final-step hidden activations of a chosen layer plus
// the sentence's rhythm metrics.
struct ActivationTable {
    Eigen::MatrixXd activations;  // n x hidden
    std::vector<std::string> ids;
    std::vector<std::string> languages;
    std::vector<MetricVector> metrics;
    int layer = 2;
};

struct SentenceInput {
    FeatureSequence features;
    IntervalSequence segmentation;
};

// Analysis-mode forward (dropout kept, seeded per sentence); stores the
// final-step hidden state of the requested layer.
ActivationTable collect_activations(const LstmModel& model,
                                    const std::vector<SentenceInput>& sentences, int layer,
                                    uint64_t seed);

struct UnitCorrelation {
    int unit = 0;
    double r = 0.0;
    double p = 1.0;
    bool defined = true;
    bool significant = false;  // after Bonferroni correction
};

// Pearson correlation of each unit against one metric. `correction_count` is
// the number of tests the Bonferroni correction divides alpha by (per-layer
// units x metrics by default; pass a pooled count to correct across layers).
std::vector<UnitCorrelation> single_cell_correlation(const ActivationTable& table,
                                                     const std::vector<double>& metric_values,
                                                     double significance = 0.05,
                                                     long correction_count = 0);

struct LanguagePoint {
    std::string language;
    double x_mean = 0.0, x_se = 0.0;
    double y_mean = 0.0, y_se = 0.0;
    long count = 0;
};

// Projects every row through two correlates and aggregates per language
// (mean and standard error of the mean, population-sd based).
std::vector<LanguagePoint> project_map(const LinearCorrelate& correlate_x,
                                       const LinearCorrelate& correlate_y,
                                       const Eigen::MatrixXd& activations,
                                       const std::vector<std::string>& languages);

void save_map_csv(const std::vector<LanguagePoint>& points, const std::string& corpus_tag,
                  const std::string& path, bool append = false);

}  // namespace rhythmlab
