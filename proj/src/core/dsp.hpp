#pragma once

#include <cstdint>
#include <vector>

#include "core/wav.hpp"

namespace rhythmlab {

inline constexpr int kFrameLength = 512;           // 32 ms at 16 kHz
inline constexpr double kFrameRate = 16000.0 / 512.0;  // 31.25 Hz
inline constexpr double kReferenceRms = 0.1;
inline constexpr double kSplFloor = 1e-10;         // -100 dB mean-square floor
inline constexpr double kSplRangeLow = -80.0;
inline constexpr double kSplRangeHigh = 0.0;

// First-order shelving high-pass H(z) = ((1+A)+(1-A)z^-1)/((1+B)+(1-B)z^-1),
// the bilinear transform of (1 + s/w_a)/(1 + s/w_b).
struct FilterSpec {
    double omega_a = 2.0 * 3.14159265358979323846 * 200.0;   // rad/s
    double omega_b = 2.0 * 3.14159265358979323846 * 5000.0;  // rad/s
    int sample_rate = kTargetSampleRate;

    double coeff_a() const { return 2.0 * sample_rate / omega_a; }
    double coeff_b() const { return 2.0 * sample_rate / omega_b; }

    // |H| of the discrete filter at frequency hz.
    double discrete_gain(double hz) const;
    // |H(jw)| of the underlying continuous-time prototype.
    double analog_gain(double hz) const;
};

AudioSignal normalize_amplitude(const AudioSignal& signal);
AudioSignal apply_preemphasis(const AudioSignal& signal, const FilterSpec& filter = {});

// One SPL value (dB) per non-overlapping 512-sample window; the trailing
// partial window is dropped. Throws when the signal is shorter than a window.
std::vector<double> frame_spl(const AudioSignal& signal);

struct VoicingResult {
    std::vector<double> voiced;  // 0 or 1 per frame
    std::vector<double> f0;      // Hz, 0 when unvoiced
};

struct VoicingConfig {
    double f0_min = 75.0;
    double f0_max = 500.0;
    double peak_threshold = 0.45;
    double energy_gate_db = 40.0;  // relative to the loudest frame
};

VoicingResult detect_voicing(const AudioSignal& signal, const VoicingConfig& config = {});

}  // namespace rhythmlab
