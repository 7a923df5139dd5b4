#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace rhythmlab {

struct ElasticNetOptions {
    double r1 = 0.2;               // L1 mixing ratio
    int folds = 7;
    int n_alphas = 50;
    double alpha_min_ratio = 1e-4;
    double kkt_tolerance = 1e-8;
    int max_sweeps = 10000;
    uint64_t seed = 0;
};

// Linear map from raw activations to one rhythm metric. Weights live in the
// standardized-column basis; the original-basis form folds the scaling back.
struct LinearCorrelate {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    double alpha = 0.0;
    double r1 = 0.2;
    std::string metric;
    int layer = 0;
    Eigen::VectorXd x_mean, x_scale;
    double y_norm = 1.0;   // quadratic norm of the original targets
    bool degenerate = false;  // constant target, zero-weight model

    Eigen::VectorXd weights_original() const;
    double intercept_original() const;
    // Prediction in the metric's original units.
    double predict(const Eigen::RowVectorXd& x_raw) const;
};

// Cyclic coordinate descent for
//   1/(2n) ||y - Xw||^2 + alpha r1 ||w||_1 + alpha (1-r1) ||w||^2 / 2
// on already centered/standardized data. Iterates until the KKT residual
// drops below kkt_tolerance.
Eigen::VectorXd elastic_net_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                               double r1, double kkt_tolerance, int max_sweeps,
                               Eigen::VectorXd w0 = {});

// Max over coordinates of the subgradient-optimality violation.
double elastic_net_kkt_residual(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, double alpha, double r1);

// Disjoint folds covering all rows, sizes within 1 of each other. With group
// labels, rows of every group are spread round-robin across folds.
std::vector<std::vector<int>> cv_folds(int n, int k, uint64_t seed,
                                       const std::vector<std::string>* groups = nullptr);

// Normalizes y to unit quadratic norm, standardizes X internally, picks alpha
// on a descending 50-point log grid by k-fold cross-validation, then refits on
// the full data.
LinearCorrelate elastic_net_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const ElasticNetOptions& options = {},
                                const std::vector<std::string>* groups = nullptr);

void save_correlate_json(const LinearCorrelate& c, const std::string& path);
LinearCorrelate load_correlate_json(const std::string& path);

}  // namespace rhythmlab
