#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/lstm.hpp"

namespace rhythmlab {

// Euclidean distance between element-wise square roots of two probability
// vectors.
double hellinger(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// -ln sum_i sqrt(p_i q_i); the coefficient is clamped at 1e-12 so disjoint
// supports give a large finite value. `clamped` reports when that happened.
double bhattacharyya(const Eigen::VectorXd& p, const Eigen::VectorXd& q, bool* clamped = nullptr);

enum class Measure { hellinger, bhattacharyya };

Measure measure_from_name(const std::string& name);

struct DissimilarityMatrix {
    Eigen::MatrixXd d;                 // L x L, symmetric, zero diagonal
    std::vector<std::string> labels;
    Measure measure = Measure::bhattacharyya;
};

// Per-language histograms over a balanced recording set: omega_i(n) is
// recording n's output mass for language i, normalized over recordings.
struct LanguageHistograms {
    Eigen::MatrixXd omega;    // L x N, rows sum to 1
    Eigen::MatrixXd vectors;  // N x L, final-step output distributions z_n
    std::vector<int> recording_language;   // per column of omega
    std::vector<std::string> labels;
};

// Runs analysis-mode forwards (dropout kept, seeded per recording) on a
// balanced subset and aggregates final-step outputs. `repeats` averages that
// many sampled forwards per recording.
LanguageHistograms collect_histograms(const LstmModel& model,
                                      const std::vector<SegmentRecord>& segments,
                                      const std::vector<size_t>& subset, uint64_t seed,
                                      int repeats = 1);

DissimilarityMatrix histogram_distances(const LanguageHistograms& hist, Measure measure);

void save_dissimilarity_csv(const DissimilarityMatrix& m, const std::string& path);
void save_histograms_csv(const LanguageHistograms& hist, const std::string& path);
void save_vectors_csv(const LanguageHistograms& hist, const std::string& path);

struct VectorTable {
    Eigen::MatrixXd rows;           // N x D
    std::vector<std::string> ids;
    std::vector<std::string> languages;
};

LanguageHistograms load_histograms_csv(const std::string& path);
VectorTable load_vectors_csv(const std::string& path);

}  // namespace rhythmlab
