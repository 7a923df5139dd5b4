#include "core/augment.hpp"

#include <cmath>

#include "core/common.hpp"

namespace rhythmlab {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kQuarterPi = 3.14159265358979323846 / 4.0;

}  // namespace

namespace {

// Evenly placed over [0,1], endpoints included; keeps the zero-angle map
// within 0.01 of the identity.
inline double center_at(int k, int n) { return n > 1 ? static_cast<double>(k) / (n - 1) : 0.5; }

}  // namespace

DistortionMap::DistortionMap() {
    for (int k = 0; k < n_; ++k) {
        centers_[static_cast<size_t>(k)] = center_at(k, n_);
        weights_[static_cast<size_t>(k)] = 1.0;
    }
    finalize();
}

DistortionMap::DistortionMap(const DistortionConfig& config, std::mt19937_64& rng) {
    if (config.n_sigmoids <= 0 || config.n_sigmoids > 16)
        throw Error::invalid("n_sigmoids must be in 1..16");
    n_ = config.n_sigmoids;
    contraction_ = config.contraction;
    std::normal_distribution<double> angle(0.0, config.angle_sd);
    for (int k = 0; k < n_; ++k) {
        centers_[static_cast<size_t>(k)] = center_at(k, n_);
        double theta = angle(rng);
        while (std::abs(theta) >= kQuarterPi) theta = angle(rng);
        weights_[static_cast<size_t>(k)] = std::tan(kQuarterPi + theta);
    }
    finalize();
}

double DistortionMap::raw(double x) const {
    double acc = 0.0;
    for (int k = 0; k < n_; ++k)
        acc += weights_[static_cast<size_t>(k)] *
               sigmoid(contraction_ * (x - centers_[static_cast<size_t>(k)]));
    return acc;
}

void DistortionMap::finalize() {
    h0_ = raw(0.0);
    h1_ = raw(1.0);
}

double DistortionMap::operator()(double x) const {
    return (raw(x) - h0_) / (h1_ - h0_);
}

void augment_batch(std::vector<FeatureSequence*>& batch, const DistortionConfig& config,
                   std::mt19937_64& rng) {
    const DistortionMap g(config, rng);
    for (FeatureSequence* seq : batch) {
        for (Eigen::Index t = 0; t < seq->levels.rows(); ++t)
            for (int c = 0; c < 3; ++c) seq->levels(t, c) = g(seq->levels(t, c));
        seq->recompute_deltas();
    }
}

}  // namespace rhythmlab
