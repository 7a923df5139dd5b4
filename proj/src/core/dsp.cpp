#include "core/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "core/common.hpp"

namespace rhythmlab {

double FilterSpec::discrete_gain(double hz) const {
    const double a = coeff_a(), b = coeff_b();
    const double w = 2.0 * M_PI * hz / sample_rate;
    const std::complex<double> z_inv = std::polar(1.0, -w);
    const std::complex<double> num = (1.0 + a) + (1.0 - a) * z_inv;
    const std::complex<double> den = (1.0 + b) + (1.0 - b) * z_inv;
    return std::abs(num / den);
}

double FilterSpec::analog_gain(double hz) const {
    const double w = 2.0 * M_PI * hz;
    return std::sqrt((1.0 + (w / omega_a) * (w / omega_a)) /
                     (1.0 + (w / omega_b) * (w / omega_b)));
}

AudioSignal normalize_amplitude(const AudioSignal& signal) {
    if (signal.samples.empty()) throw Error::invalid("cannot normalize an empty signal");
    double sumsq = 0.0;
    for (double s : signal.samples) sumsq += s * s;
    const double rms = std::sqrt(sumsq / signal.samples.size());
    AudioSignal out = signal;
    if (rms <= 0.0) return out;  // silence passes through
    const double gain = kReferenceRms / rms;
    for (double& s : out.samples) s *= gain;
    return out;
}

AudioSignal apply_preemphasis(const AudioSignal& signal, const FilterSpec& filter) {
    const double a = filter.coeff_a(), b = filter.coeff_b();
    const double b0 = 1.0 + a, b1 = 1.0 - a;
    const double a0 = 1.0 + b, a1 = 1.0 - b;
    AudioSignal out = signal;
    double x_prev = 0.0, y_prev = 0.0;
    for (size_t n = 0; n < signal.samples.size(); ++n) {
        const double x = signal.samples[n];
        const double y = (b0 * x + b1 * x_prev - a1 * y_prev) / a0;
        out.samples[n] = y;
        x_prev = x;
        y_prev = y;
    }
    return out;
}

std::vector<double> frame_spl(const AudioSignal& signal) {
    const size_t n_frames = signal.samples.size() / kFrameLength;
    if (n_frames == 0) {
        throw Error::validation(strfmt("signal too short for one %d-sample window (%zu samples)",
                                       kFrameLength, signal.samples.size()));
    }
    std::vector<double> spl(n_frames);
    for (size_t f = 0; f < n_frames; ++f) {
        const double* x = signal.samples.data() + f * kFrameLength;
        double sumsq = 0.0;
        for (int i = 0; i < kFrameLength; ++i) sumsq += x[i] * x[i];
        spl[f] = 10.0 * std::log10(sumsq / kFrameLength + kSplFloor);
    }
    return spl;
}

VoicingResult detect_voicing(const AudioSignal& signal, const VoicingConfig& config) {
    const std::vector<double> spl = frame_spl(signal);
    const size_t n_frames = spl.size();
    const double max_spl = *std::max_element(spl.begin(), spl.end());
    const double gate = max_spl - config.energy_gate_db;

    const int lag_min = static_cast<int>(std::ceil(signal.sample_rate / config.f0_max));
    const int lag_max = static_cast<int>(std::floor(signal.sample_rate / config.f0_min));

    VoicingResult out;
    out.voiced.assign(n_frames, 0.0);
    out.f0.assign(n_frames, 0.0);

    std::vector<double> centered(kFrameLength);
    std::vector<double> sq_prefix(kFrameLength + 1);
    std::vector<double> corr(static_cast<size_t>(lag_max) + 1, 0.0);

    for (size_t f = 0; f < n_frames; ++f) {
        if (spl[f] <= gate) continue;
        const double* x = signal.samples.data() + f * kFrameLength;
        double mean = 0.0;
        for (int i = 0; i < kFrameLength; ++i) mean += x[i];
        mean /= kFrameLength;
        sq_prefix[0] = 0.0;
        for (int i = 0; i < kFrameLength; ++i) {
            centered[i] = x[i] - mean;
            sq_prefix[i + 1] = sq_prefix[i] + centered[i] * centered[i];
        }

        double best = 0.0;
        for (int lag = lag_min; lag <= lag_max; ++lag) {
            const int n = kFrameLength - lag;
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += centered[i] * centered[i + lag];
            const double e0 = sq_prefix[n];
            const double e1 = sq_prefix[kFrameLength] - sq_prefix[lag];
            const double denom = std::sqrt(e0 * e1);
            const double r = (denom > 1e-20) ? dot / denom : 0.0;
            corr[static_cast<size_t>(lag)] = r;
            best = std::max(best, r);
        }
        if (best <= config.peak_threshold) continue;

        // The smallest lag close to the peak wins, so period multiples do not
        // halve the estimate.
        int best_lag = lag_max;
        for (int lag = lag_min; lag <= lag_max; ++lag) {
            if (corr[static_cast<size_t>(lag)] >= best - 1e-2) {
                best_lag = lag;
                break;
            }
        }
        out.voiced[f] = 1.0;
        out.f0[f] = static_cast<double>(signal.sample_rate) / best_lag;
    }
    return out;
}

}  // namespace rhythmlab
