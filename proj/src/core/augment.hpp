#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "core/features.hpp"

namespace rhythmlab {

struct DistortionConfig {
    int n_sigmoids = 6;
    double contraction = 15.0;
    double angle_sd = 3.14159265358979323846 / 10.0;
};

// Monotone map g: [0,1] -> [0,1] built from evenly placed sigmoids whose
// weights come from random slope angles; g(0) = 0 and g(1) = 1 exactly.
class DistortionMap {
public:
    DistortionMap();  // identity-like base map (all angles zero)
    DistortionMap(const DistortionConfig& config, std::mt19937_64& rng);

    double operator()(double x) const;

private:
    void finalize();
    double raw(double x) const;

    double contraction_ = 15.0;
    std::array<double, 16> weights_{};
    std::array<double, 16> centers_{};
    int n_ = 6;
    double h0_ = 0.0, h1_ = 1.0;
};

// Applies one freshly drawn map to the level channels of every segment in the
// batch and recomputes deltas. Voicing stays binary because g fixes 0 and 1.
void augment_batch(std::vector<FeatureSequence*>& batch, const DistortionConfig& config,
                   std::mt19937_64& rng);

}  // namespace rhythmlab
