#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace rhythmlab {

struct QdaClass {
    std::string label;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // ridge-regularized
    double prior = 0.0;
    double log_det = 0.0;
    Eigen::MatrixXd precision;
};

struct QdaModel {
    std::vector<QdaClass> classes;
    int dims = 0;

    int class_index(const std::string& label) const;
};

// Per-class Gaussians with empirical (or uniform) priors; covariances get a
// ridge of 1e-6 * trace/d.
QdaModel qda_fit(const Eigen::MatrixXd& points, const std::vector<std::string>& labels,
                 bool uniform_priors = false);

// Construction from known parameters (no fitting).
QdaModel qda_from_parameters(const std::vector<std::string>& labels,
                             const std::vector<Eigen::VectorXd>& means,
                             const std::vector<Eigen::MatrixXd>& covariances,
                             const std::vector<double>& priors);

Eigen::VectorXd qda_discriminants(const QdaModel& model, const Eigen::VectorXd& point);
int qda_predict(const QdaModel& model, const Eigen::VectorXd& point);
std::vector<int> qda_top_k(const QdaModel& model, const Eigen::VectorXd& point, int k);

void save_qda_json(const QdaModel& model, const std::string& path);

}  // namespace rhythmlab
