#include "core/elastic_net.hpp"

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

Eigen::VectorXd LinearCorrelate::weights_original() const {
    return y_norm * (weights.array() / x_scale.array()).matrix();
}

double LinearCorrelate::intercept_original() const {
    return y_norm * (intercept - (weights.array() * x_mean.array() / x_scale.array()).sum());
}

double LinearCorrelate::predict(const Eigen::RowVectorXd& x_raw) const {
    return x_raw * weights_original() + intercept_original();
}

namespace {

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

double elastic_net_kkt_residual(const MatrixXd& x, const VectorXd& y, const VectorXd& w,
                                double alpha, double r1) {
    const double n = static_cast<double>(x.rows());
    const VectorXd residual = y - x * w;
    const VectorXd g = (x.transpose() * residual) / n - alpha * (1.0 - r1) * w;
    const double l1 = alpha * r1;
    double worst = 0.0;
    for (Index j = 0; j < w.size(); ++j) {
        const double viol = (w(j) != 0.0) ? std::abs(g(j) - l1 * (w(j) > 0.0 ? 1.0 : -1.0))
                                          : std::max(0.0, std::abs(g(j)) - l1);
        worst = std::max(worst, viol);
    }
    return worst;
}

VectorXd elastic_net_cd(const MatrixXd& x, const VectorXd& y, double alpha, double r1,
                        double kkt_tolerance, int max_sweeps, VectorXd w0) {
    const Index n = x.rows(), p = x.cols();
    if (y.size() != n) throw Error::invalid("target length must match row count");
    VectorXd w = (w0.size() == p) ? std::move(w0) : VectorXd::Zero(p);

    const double dn = static_cast<double>(n);
    VectorXd col_ms(p);  // (1/n) ||x_j||^2
    for (Index j = 0; j < p; ++j) col_ms(j) = x.col(j).squaredNorm() / dn;

    VectorXd residual = y - x * w;
    const double l1 = alpha * r1;
    const double l2 = alpha * (1.0 - r1);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (Index j = 0; j < p; ++j) {
            const double denom = col_ms(j) + l2;
            if (denom <= 0.0) continue;
            const double rho = x.col(j).dot(residual) / dn + col_ms(j) * w(j);
            const double updated = soft_threshold(rho, l1) / denom;
            const double delta = updated - w(j);
            if (delta != 0.0) {
                residual -= delta * x.col(j);
                w(j) = updated;
            }
        }
        if (elastic_net_kkt_residual(x, y, w, alpha, r1) < kkt_tolerance) break;
    }
    return w;
}

std::vector<std::vector<int>> cv_folds(int n, int k, uint64_t seed,
                                       const std::vector<std::string>* groups) {
    if (k < 2 || k > n) throw Error::invalid(strfmt("cannot make %d folds from %d rows", k, n));
    std::vector<int> order;
    order.reserve(static_cast<size_t>(n));
    if (groups) {
        if (static_cast<int>(groups->size()) != n)
            throw Error::invalid("one group label per row required");
        std::map<std::string, std::vector<int>> by_group;
        for (int i = 0; i < n; ++i) by_group[(*groups)[static_cast<size_t>(i)]].push_back(i);
        for (auto& [name, members] : by_group) {
            auto rng = make_rng(mix_seed(seed, hash_tag(name.c_str())));
            std::shuffle(members.begin(), members.end(), rng);
            order.insert(order.end(), members.begin(), members.end());
        }
    } else {
        order.resize(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        auto rng = make_rng(mix_seed(seed, hash_tag("folds")));
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<std::vector<int>> folds(static_cast<size_t>(k));
    for (int i = 0; i < n; ++i) folds[static_cast<size_t>(i % k)].push_back(order[static_cast<size_t>(i)]);
    return folds;
}

namespace {

struct Standardized {
    MatrixXd x;
    VectorXd mean, scale;
};

Standardized standardize(const MatrixXd& x) {
    Standardized s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.x = x.rowwise() - s.mean.transpose();
    s.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt(s.x.col(j).squaredNorm() / n);
        s.scale(j) = sd > 0.0 ? sd : 1.0;
        s.x.col(j) /= s.scale(j);
    }
    return s;
}

double alpha_max_for(const MatrixXd& x_std, const VectorXd& y_centered, double r1) {
    const double n = static_cast<double>(x_std.rows());
    const double corr = (x_std.transpose() * y_centered).cwiseAbs().maxCoeff() / n;
    return corr / std::max(r1, 1e-3);
}

}  // namespace

LinearCorrelate elastic_net_fit(const MatrixXd& x, const VectorXd& y,
                                const ElasticNetOptions& options,
                                const std::vector<std::string>* groups) {
    const Index n = x.rows(), p = x.cols();
    if (y.size() != n) throw Error::invalid("target length must match row count");
    if (n < options.folds) throw Error::invalid("fewer rows than folds");
    if (options.r1 < 0.0 || options.r1 > 1.0) throw Error::invalid("r1 must be in [0, 1]");

    LinearCorrelate fit;
    fit.r1 = options.r1;

    const double y_norm = y.norm();
    if (y_norm <= 0.0) {
        fit.weights = VectorXd::Zero(p);
        fit.x_mean = VectorXd::Zero(p);
        fit.x_scale = VectorXd::Ones(p);
        fit.degenerate = true;
        log_warn("elastic_net_fit: all-zero target, returning zero weights");
        return fit;
    }
    const VectorXd y_unit = y / y_norm;
    const double y_mean = y_unit.mean();
    const VectorXd y_centered = y_unit.array() - y_mean;
    fit.y_norm = y_norm;
    fit.intercept = y_mean;

    Standardized full = standardize(x);
    fit.x_mean = full.mean;
    fit.x_scale = full.scale;

    if (y_centered.norm() <= 1e-14) {
        fit.weights = VectorXd::Zero(p);
        fit.degenerate = true;
        log_warn("elastic_net_fit: constant target, returning zero weights");
        return fit;
    }

    const double alpha_max = alpha_max_for(full.x, y_centered, options.r1);
    std::vector<double> alphas(static_cast<size_t>(options.n_alphas));
    const double log_max = std::log(alpha_max);
    const double log_min = std::log(alpha_max * options.alpha_min_ratio);
    for (int a = 0; a < options.n_alphas; ++a) {
        const double frac = options.n_alphas > 1
                                ? static_cast<double>(a) / (options.n_alphas - 1)
                                : 0.0;
        alphas[static_cast<size_t>(a)] = std::exp(log_max + frac * (log_min - log_max));
    }

    const auto folds = cv_folds(static_cast<int>(n), options.folds, options.seed, groups);
    std::vector<double> cv_error(static_cast<size_t>(options.n_alphas), 0.0);

    for (const auto& fold : folds) {
        std::vector<char> in_val(static_cast<size_t>(n), 0);
        for (int i : fold) in_val[static_cast<size_t>(i)] = 1;
        const Index n_val = static_cast<Index>(fold.size());
        const Index n_train = n - n_val;

        MatrixXd x_train(n_train, p), x_val(n_val, p);
        VectorXd y_train(n_train), y_val(n_val);
        Index ti = 0, vi = 0;
        for (Index i = 0; i < n; ++i) {
            if (in_val[static_cast<size_t>(i)]) {
                x_val.row(vi) = x.row(i);
                y_val(vi++) = y_unit(i);
            } else {
                x_train.row(ti) = x.row(i);
                y_train(ti++) = y_unit(i);
            }
        }

        Standardized st = standardize(x_train);
        const double fold_y_mean = y_train.mean();
        const VectorXd y_train_c = y_train.array() - fold_y_mean;
        MatrixXd x_val_std = (x_val.rowwise() - st.mean.transpose());
        for (Index j = 0; j < p; ++j) x_val_std.col(j) /= st.scale(j);

        VectorXd w = VectorXd::Zero(p);
        for (int a = 0; a < options.n_alphas; ++a) {
            w = elastic_net_cd(st.x, y_train_c, alphas[static_cast<size_t>(a)], options.r1,
                               options.kkt_tolerance, options.max_sweeps, w);
            const VectorXd pred = (x_val_std * w).array() + fold_y_mean;
            cv_error[static_cast<size_t>(a)] +=
                (pred - y_val).squaredNorm() / static_cast<double>(n_val);
        }
    }

    int best = 0;
    for (int a = 1; a < options.n_alphas; ++a)
        if (cv_error[static_cast<size_t>(a)] < cv_error[static_cast<size_t>(best)]) best = a;

    // Final fit on the full standardized data, warm-started down the path.
    VectorXd w = VectorXd::Zero(p);
    for (int a = 0; a <= best; ++a)
        w = elastic_net_cd(full.x, y_centered, alphas[static_cast<size_t>(a)], options.r1,
                           options.kkt_tolerance, options.max_sweeps, w);

    fit.alpha = alphas[static_cast<size_t>(best)];
    fit.weights = w;
    return fit;
}

void save_correlate_json(const LinearCorrelate& c, const std::string& path) {
    nlohmann::json j;
    j["metric"] = c.metric;
    j["layer"] = c.layer;
    j["alpha"] = c.alpha;
    j["r1"] = c.r1;
    j["intercept"] = c.intercept;
    j["weights"] = std::vector<double>(c.weights.data(), c.weights.data() + c.weights.size());
    j["standardization"] = {
        {"x_mean", std::vector<double>(c.x_mean.data(), c.x_mean.data() + c.x_mean.size())},
        {"x_scale", std::vector<double>(c.x_scale.data(), c.x_scale.data() + c.x_scale.size())},
        {"y_norm", c.y_norm}};
    j["degenerate"] = c.degenerate;
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write json file: " + path);
    out << j.dump(1) << "\n";
}

LinearCorrelate load_correlate_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open json file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error::format(path + ": " + e.what());
    }
    LinearCorrelate c;
    c.metric = j.value("metric", "");
    c.layer = j.value("layer", 0);
    c.alpha = j.at("alpha").get<double>();
    c.r1 = j.at("r1").get<double>();
    c.intercept = j.at("intercept").get<double>();
    const auto w = j.at("weights").get<std::vector<double>>();
    c.weights = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
    const auto& s = j.at("standardization");
    const auto xm = s.at("x_mean").get<std::vector<double>>();
    const auto xs = s.at("x_scale").get<std::vector<double>>();
    c.x_mean = Eigen::Map<const VectorXd>(xm.data(), static_cast<Index>(xm.size()));
    c.x_scale = Eigen::Map<const VectorXd>(xs.data(), static_cast<Index>(xs.size()));
    c.y_norm = s.at("y_norm").get<double>();
    c.degenerate = j.value("degenerate", false);
    return c;
}

}  // namespace rhythmlab
