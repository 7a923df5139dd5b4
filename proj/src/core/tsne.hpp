#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace rhythmlab {

struct TsneOptions {
    double perplexity = 30.0;
    int iterations = 1000;
    int exaggeration_iterations = 250;
    double exaggeration = 12.0;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    double entropy_tolerance = 1e-4;  // |H - log(perplexity)| per point, nats
    uint64_t seed = 0;
};

struct TsneResult {
    Eigen::MatrixXd embedding;     // n x 2
    Eigen::VectorXd point_entropy;  // calibrated conditional entropy per point, nats
    double kl = 0.0;               // final KL divergence
};

// Exact (quadratic-cost) t-SNE with per-point bandwidths calibrated by binary
// search so every conditional distribution has entropy log(perplexity).
TsneResult tsne(const Eigen::MatrixXd& points, const TsneOptions& options = {});

}  // namespace rhythmlab
