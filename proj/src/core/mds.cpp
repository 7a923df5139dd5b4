#include "core/mds.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

MatrixXd pairwise_distances(const MatrixXd& x) {
    const Index n = x.rows();
    MatrixXd d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = d(j, i) = v;
        }
    }
    return d;
}

double raw_stress(const MatrixXd& delta, const MatrixXd& d) {
    double acc = 0.0;
    for (Index i = 0; i < delta.rows(); ++i)
        for (Index j = i + 1; j < delta.cols(); ++j) {
            const double e = delta(i, j) - d(i, j);
            acc += e * e;
        }
    return acc;
}

}  // namespace

MdsResult mds(const DissimilarityMatrix& matrix, const MdsOptions& options) {
    const Index n = matrix.d.rows();
    if (n < 2) throw Error::invalid("mds needs at least 2 items");
    if (matrix.d.cols() != n) throw Error::invalid("dissimilarity matrix must be square");
    const MatrixXd& delta = matrix.d;

    double delta_sq = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) delta_sq += delta(i, j) * delta(i, j);
    if (delta_sq <= 0.0) throw Error::invalid("all dissimilarities are zero");

    MdsResult best;
    double best_stress = std::numeric_limits<double>::infinity();
    bool all_converged = true;

    for (int restart = 0; restart < options.restarts; ++restart) {
        auto rng = make_rng(mix_seed(options.seed, mix_seed(hash_tag("mds"),
                                                            static_cast<uint64_t>(restart))));
        std::normal_distribution<double> gauss(0.0, 1.0);
        MatrixXd x(n, options.dims);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);

        MatrixXd d = pairwise_distances(x);
        double stress = raw_stress(delta, d);
        std::vector<double> trace{stress};
        bool converged = false;

        MatrixXd bmat(n, n);
        for (int it = 0; it < options.max_iterations; ++it) {
            // Guttman transform: X <- (1/n) B(X) X
            bmat.setZero();
            for (Index i = 0; i < n; ++i) {
                double diag = 0.0;
                for (Index j = 0; j < n; ++j) {
                    if (i == j) continue;
                    const double b = (d(i, j) > 1e-12) ? -delta(i, j) / d(i, j) : 0.0;
                    bmat(i, j) = b;
                    diag -= b;
                }
                bmat(i, i) = diag;
            }
            x = (bmat * x) / static_cast<double>(n);
            d = pairwise_distances(x);
            const double updated = raw_stress(delta, d);
            trace.push_back(updated);
            const double improvement = stress - updated;
            stress = updated;
            if (improvement <= options.rel_tolerance * std::max(stress, 1e-300)) {
                converged = true;
                break;
            }
        }
        if (!converged) all_converged = false;

        if (stress < best_stress) {
            best_stress = stress;
            best.coords = x;
            best.stress_trace = std::move(trace);
        }
    }

    best.stress1 = std::sqrt(best_stress / delta_sq);
    best.converged = all_converged;
    if (!all_converged)
        log_warn(strfmt("mds: iteration cap %d hit before tolerance; returning best configuration",
                        options.max_iterations));
    return best;
}

}  // namespace rhythmlab
