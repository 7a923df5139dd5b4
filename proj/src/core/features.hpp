#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "core/dsp.hpp"
#include "core/wav.hpp"

namespace rhythmlab {

// Per-frame prosodic features at 31.25 Hz: normalized SPL, normalized SPL of
// the high-pass-emphasized signal, and a binary voicing flag, plus their
// one-step differences. F0 is optional and not part of the model input.
struct FeatureSequence {
    Eigen::MatrixXd levels;  // T x 3, each column in [0, 1]
    Eigen::MatrixXd deltas;  // T x 3, deltas.row(0) == 0
    Eigen::VectorXd f0;      // T, Hz (0 = unvoiced); size 0 when not extracted
    double frame_rate = kFrameRate;

    Eigen::Index frames() const { return levels.rows(); }
    bool has_f0() const { return f0.size() == levels.rows() && f0.size() > 0; }
    int dims() const { return has_f0() ? 7 : 6; }

    // Model input row [spl, splh, voiced, d_spl, d_splh, d_voiced].
    Eigen::Matrix<double, 1, 6> input_row(Eigen::Index t) const {
        Eigen::Matrix<double, 1, 6> row;
        row << levels(t, 0), levels(t, 1), levels(t, 2), deltas(t, 0), deltas(t, 1), deltas(t, 2);
        return row;
    }

    void recompute_deltas();
};

struct FeatureConfig {
    bool normalize = true;   // per-recording RMS normalization before SPL
    bool resample = false;   // accept non-16 kHz input
    bool include_f0 = false;
    VoicingConfig voicing;
};

double spl_to_unit(double spl_db);  // affine [-80, 0] dB -> [0, 1], clamped

FeatureSequence extract_features(const AudioSignal& signal, const FeatureConfig& config = {});
FeatureSequence extract_features_file(const std::string& path, const FeatureConfig& config = {});

// Binary feature file: "RFE1", u32 frames, u32 dims (6 or 7), then row-major
// float32 values, little-endian.
void save_features(const FeatureSequence& seq, const std::string& path);
FeatureSequence load_features(const std::string& path);
void export_features_csv(const FeatureSequence& seq, const std::string& path);

}  // namespace rhythmlab
