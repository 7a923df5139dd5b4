#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "core/represent.hpp"

namespace rhythmlab {

struct MdsOptions {
    int dims = 2;
    int restarts = 8;
    int max_iterations = 500;
    double rel_tolerance = 1e-9;  // relative raw-stress improvement
    uint64_t seed = 0;
};

struct MdsResult {
    Eigen::MatrixXd coords;            // n x dims, best restart
    double stress1 = 0.0;              // sqrt(raw stress / sum of squared dissimilarities)
    bool converged = true;             // every restart reached the tolerance
    std::vector<double> stress_trace;  // raw stress per iteration of the best restart
};

// SMACOF stress majorization from seeded random starts.
MdsResult mds(const DissimilarityMatrix& matrix, const MdsOptions& options = {});

}  // namespace rhythmlab
