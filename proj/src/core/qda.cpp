#include "core/qda.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int QdaModel::class_index(const std::string& label) const {
    for (size_t i = 0; i < classes.size(); ++i)
        if (classes[i].label == label) return static_cast<int>(i);
    return -1;
}

namespace {

void finalize_class(QdaClass& c, int dims) {
    const double ridge = std::max(1e-6 * c.covariance.trace() / dims, 1e-12);
    c.covariance.diagonal().array() += ridge;
    Eigen::LLT<MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success)
        throw Error::numeric("class covariance not positive definite: " + c.label);
    c.precision = llt.solve(MatrixXd::Identity(dims, dims));
    c.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

QdaModel qda_fit(const MatrixXd& points, const std::vector<std::string>& labels,
                 bool uniform_priors) {
    const Index n = points.rows();
    const int d = static_cast<int>(points.cols());
    if (static_cast<Index>(labels.size()) != n)
        throw Error::invalid("one label per point required");

    std::map<std::string, std::vector<Index>> members;
    for (Index i = 0; i < n; ++i) members[labels[static_cast<size_t>(i)]].push_back(i);

    for (const auto& [label, rows] : members) {
        if (static_cast<int>(rows.size()) < d + 2)
            throw Error::validation(strfmt("class \"%s\" has %zu points, need at least %d",
                                           label.c_str(), rows.size(), d + 2));
    }

    QdaModel model;
    model.dims = d;
    for (const auto& [label, rows] : members) {
        QdaClass c;
        c.label = label;
        c.mean = VectorXd::Zero(d);
        for (Index i : rows) c.mean += points.row(i).transpose();
        c.mean /= static_cast<double>(rows.size());

        c.covariance = MatrixXd::Zero(d, d);
        for (Index i : rows) {
            const VectorXd centered = points.row(i).transpose() - c.mean;
            c.covariance += centered * centered.transpose();
        }
        c.covariance /= static_cast<double>(rows.size() - 1);
        c.prior = uniform_priors ? 1.0 / static_cast<double>(members.size())
                                 : static_cast<double>(rows.size()) / static_cast<double>(n);
        finalize_class(c, d);
        model.classes.push_back(std::move(c));
    }
    return model;
}

QdaModel qda_from_parameters(const std::vector<std::string>& labels,
                             const std::vector<VectorXd>& means,
                             const std::vector<MatrixXd>& covariances,
                             const std::vector<double>& priors) {
    if (labels.size() != means.size() || labels.size() != covariances.size() ||
        labels.size() != priors.size())
        throw Error::invalid("parameter lists must have equal length");
    if (labels.empty()) throw Error::invalid("need at least one class");
    QdaModel model;
    model.dims = static_cast<int>(means[0].size());
    for (size_t i = 0; i < labels.size(); ++i) {
        QdaClass c;
        c.label = labels[i];
        c.mean = means[i];
        c.covariance = covariances[i];
        c.prior = priors[i];
        finalize_class(c, model.dims);
        model.classes.push_back(std::move(c));
    }
    return model;
}

VectorXd qda_discriminants(const QdaModel& model, const VectorXd& point) {
    if (static_cast<int>(point.size()) != model.dims)
        throw Error::invalid("point dimensionality mismatch");
    VectorXd scores(static_cast<Index>(model.classes.size()));
    for (size_t i = 0; i < model.classes.size(); ++i) {
        const QdaClass& c = model.classes[i];
        const VectorXd centered = point - c.mean;
        const double mahalanobis = centered.dot(c.precision * centered);
        scores(static_cast<Index>(i)) = std::log(c.prior) - 0.5 * c.log_det - 0.5 * mahalanobis;
    }
    return scores;
}

int qda_predict(const QdaModel& model, const VectorXd& point) {
    const VectorXd scores = qda_discriminants(model, point);
    int best = 0;
    for (Index i = 1; i < scores.size(); ++i)
        if (scores(i) > scores(best)) best = static_cast<int>(i);
    return best;
}

std::vector<int> qda_top_k(const QdaModel& model, const VectorXd& point, int k) {
    const VectorXd scores = qda_discriminants(model, point);
    std::vector<int> idx(static_cast<size_t>(scores.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores(a) > scores(b); });
    idx.resize(static_cast<size_t>(std::min<Index>(k, scores.size())));
    return idx;
}

void save_qda_json(const QdaModel& model, const std::string& path) {
    nlohmann::json j;
    j["dims"] = model.dims;
    j["classes"] = nlohmann::json::array();
    for (const QdaClass& c : model.classes) {
        nlohmann::json jc;
        jc["label"] = c.label;
        jc["prior"] = c.prior;
        jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
        std::vector<std::vector<double>> cov;
        for (Index r = 0; r < c.covariance.rows(); ++r) {
            std::vector<double> row(static_cast<size_t>(c.covariance.cols()));
            for (Index col = 0; col < c.covariance.cols(); ++col)
                row[static_cast<size_t>(col)] = c.covariance(r, col);
            cov.push_back(std::move(row));
        }
        jc["covariance"] = cov;
        j["classes"].push_back(std::move(jc));
    }
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write json file: " + path);
    out << j.dump(1) << "\n";
}

}  // namespace rhythmlab
