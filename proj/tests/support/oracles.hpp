#pragma once

// Independent reference implementations used as test oracles. These are kept
// deliberately naive and separate from the library code paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/rhythm.hpp"

namespace test_support {

struct NaiveMetrics {
    std::optional<double> percent_v, delta_c, delta_v, varco_c, varco_v, rpvi_c, npvi_v;
};

// Straight-from-the-formula recomputation of every rhythm metric.
inline NaiveMetrics naive_metrics(const rhythmlab::IntervalSequence& seq) {
    std::vector<double> c, v;
    for (const auto& iv : seq.intervals) {
        if (iv.kind == rhythmlab::IntervalKind::consonantal) c.push_back(iv.duration);
        else v.push_back(iv.duration);
    }
    NaiveMetrics m;
    double sum_c = 0.0, sum_v = 0.0;
    for (double d : c) sum_c += d;
    for (double d : v) sum_v += d;
    if (!c.empty() && !v.empty()) m.percent_v = 100.0 * sum_v / (sum_c + sum_v);

    auto sd_pop = [](const std::vector<double>& d) {
        double mean = 0.0;
        for (double x : d) mean += x;
        mean /= d.size();
        double ss = 0.0;
        for (double x : d) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / d.size());
    };
    if (c.size() >= 2) {
        m.delta_c = 1000.0 * sd_pop(c);
        m.varco_c = 100.0 * sd_pop(c) / (sum_c / c.size());
        double acc = 0.0;
        for (size_t k = 0; k + 1 < c.size(); ++k) acc += std::fabs(c[k + 1] - c[k]);
        m.rpvi_c = 1000.0 * acc / (c.size() - 1);
    }
    if (v.size() >= 2) {
        m.delta_v = 1000.0 * sd_pop(v);
        m.varco_v = 100.0 * sd_pop(v) / (sum_v / v.size());
        double acc = 0.0;
        for (size_t k = 0; k + 1 < v.size(); ++k)
            acc += std::fabs(v[k + 1] - v[k]) / ((v[k + 1] + v[k]) / 2.0);
        m.npvi_v = 100.0 * acc / (v.size() - 1);
    }
    return m;
}

// Single-bin DFT amplitude of x at frequency hz (exact for integer cycles).
inline double goertzel_amplitude(const std::vector<double>& x, double hz, double sample_rate,
                                 size_t begin, size_t count) {
    std::complex<double> acc(0.0, 0.0);
    const double w = 2.0 * M_PI * hz / sample_rate;
    for (size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(begin + i);
        acc += x[begin + i] * std::exp(std::complex<double>(0.0, -w * t));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(count);
}

// Sample-weight formula recomputed with a different structure (string keys,
// two passes over flat lists).
inline std::vector<double> naive_sample_weights(const std::vector<std::string>& languages,
                                                const std::vector<std::string>& speakers,
                                                double k1, double k2) {
    std::map<std::string, double> n_s;
    for (size_t i = 0; i < speakers.size(); ++i) n_s[languages[i] + "\t" + speakers[i]] += 1.0;
    std::map<std::string, double> n_spk;
    for (const auto& [key, n] : n_s) {
        const std::string lang = key.substr(0, key.find('\t'));
        n_spk[lang] += n / (k1 + n);
    }
    std::vector<double> w(speakers.size());
    for (size_t i = 0; i < speakers.size(); ++i) {
        const double n = n_s[languages[i] + "\t" + speakers[i]];
        w[i] = 1.0 / (k2 + n_spk[languages[i]]) * 1.0 / (k1 + n);
    }
    return w;
}

// Orthogonal Procrustes alignment error: RMS distance between B and the best
// rotation/reflection+translation of A onto B.
inline double procrustes_rms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd ac = a.rowwise() - a.colwise().mean();
    Eigen::MatrixXd bc = b.rowwise() - b.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ac.transpose() * bc,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
    const Eigen::MatrixXd aligned = ac * rot;
    return std::sqrt((aligned - bc).squaredNorm() / static_cast<double>(a.rows()));
}

}  // namespace test_support
