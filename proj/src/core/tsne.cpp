#include "core/tsne.hpp"

#include <cmath>
#include <random>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd squared_distances(const MatrixXd& x) {
    const VectorXd norms = x.rowwise().squaredNorm();
    MatrixXd d2 = -2.0 * (x * x.transpose());
    d2.colwise() += norms;
    d2.rowwise() += norms.transpose();
    d2.diagonal().setZero();
    return d2.cwiseMax(0.0);
}

// Conditional distribution for one point at a given precision; returns its
// entropy in nats.
double fill_conditional(const MatrixXd& d2, Index i, double beta, VectorXd& p) {
    const Index n = d2.rows();
    double dmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2(i, j));
    double sum = 0.0, weighted = 0.0;
    for (Index j = 0; j < n; ++j) {
        if (j == i) {
            p(j) = 0.0;
            continue;
        }
        const double v = std::exp(-beta * (d2(i, j) - dmin));
        p(j) = v;
        sum += v;
        weighted += (d2(i, j) - dmin) * v;
    }
    p /= sum;
    return std::log(sum) + beta * weighted / sum;
}

}  // namespace

TsneResult tsne(const MatrixXd& points, const TsneOptions& options) {
    const Index n = points.rows();
    if (n < 4) throw Error::invalid("tsne needs at least 4 points");
    if (options.perplexity < 2.0) throw Error::invalid("perplexity must be at least 2");
    if (options.perplexity >= static_cast<double>(n - 1))
        throw Error::invalid(strfmt("perplexity %.1f must be below n-1 = %ld",
                                    options.perplexity, static_cast<long>(n - 1)));

    const MatrixXd d2 = squared_distances(points);
    const double target_entropy = std::log(options.perplexity);

    TsneResult result;
    result.point_entropy.resize(n);

    // Per-point bandwidth calibration.
    MatrixXd p_cond(n, n);
    VectorXd row(n);
    for (Index i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_min = -std::numeric_limits<double>::infinity();
        double beta_max = std::numeric_limits<double>::infinity();
        double entropy = fill_conditional(d2, i, beta, row);
        for (int it = 0; it < 200 && std::abs(entropy - target_entropy) > options.entropy_tolerance;
             ++it) {
            if (entropy > target_entropy) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
            entropy = fill_conditional(d2, i, beta, row);
        }
        result.point_entropy(i) = entropy;
        p_cond.row(i) = row.transpose();
    }

    // Symmetrized affinities; the conditionals each sum to 1, so P sums to 1.
    MatrixXd p = (p_cond + p_cond.transpose()) / (2.0 * static_cast<double>(n));
    p = p.cwiseMax(1e-12);
    p.diagonal().setZero();
    p *= options.exaggeration;

    auto rng = make_rng(mix_seed(options.seed, hash_tag("tsne")));
    std::normal_distribution<double> gauss(0.0, 1e-4);
    MatrixXd y(n, 2);
    for (Index i = 0; i < y.size(); ++i) y.data()[i] = gauss(rng);

    MatrixXd velocity = MatrixXd::Zero(n, 2);
    MatrixXd gains = MatrixXd::Ones(n, 2);
    MatrixXd num(n, n), grad(n, 2);

    for (int it = 0; it < options.iterations; ++it) {
        // Student-t kernel in the embedding.
        double num_sum = 0.0;
        for (Index i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (Index j = i + 1; j < n; ++j) {
                const double dx = y(i, 0) - y(j, 0);
                const double dy = y(i, 1) - y(j, 1);
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num(i, j) = num(j, i) = v;
                num_sum += 2.0 * v;
            }
        }

        grad.setZero();
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(num(i, j) / num_sum, 1e-12);
                const double mult = 4.0 * (p(i, j) - q) * num(i, j);
                grad(i, 0) += mult * (y(i, 0) - y(j, 0));
                grad(i, 1) += mult * (y(i, 1) - y(j, 1));
            }
        }

        const double momentum =
            it < options.exaggeration_iterations ? options.initial_momentum : options.final_momentum;
        for (Index i = 0; i < n; ++i) {
            for (int c = 0; c < 2; ++c) {
                const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
                gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
                velocity(i, c) =
                    momentum * velocity(i, c) - options.learning_rate * gains(i, c) * grad(i, c);
                y(i, c) += velocity(i, c);
            }
        }
        y.rowwise() -= y.colwise().mean();

        if (it + 1 == options.exaggeration_iterations) p /= options.exaggeration;
    }
    if (options.iterations < options.exaggeration_iterations) p /= options.exaggeration;

    // Final KL divergence.
    double num_sum = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            const double dx = y(i, 0) - y(j, 0);
            const double dy = y(i, 1) - y(j, 1);
            const double v = 1.0 / (1.0 + dx * dx + dy * dy);
            num(i, j) = num(j, i) = v;
            num_sum += 2.0 * v;
        }
    double kl = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = std::max(num(i, j) / num_sum, 1e-12);
            if (p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / q);
        }

    result.embedding = y;
    result.kl = kl;
    return result;
}

}  // namespace rhythmlab
