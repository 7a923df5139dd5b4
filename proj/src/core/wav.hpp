#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhythmlab {

struct AudioSignal {
    std::vector<double> samples;  // mono, [-1, 1]
    int sample_rate = 16000;
};

inline constexpr int kTargetSampleRate = 16000;

// PCM WAV reader: mono or stereo (averaged), 8/16/24/32-bit integer or
// 32/64-bit float. Throws Error on malformed files.
AudioSignal decode_wav(const std::string& path);

// 16-bit PCM writer, used by the synthetic-corpus generator and tests.
void write_wav_16(const std::string& path, const std::vector<double>& samples, int sample_rate);

// Windowed-sinc resampler. Output length = round(n * to_rate / from_rate).
std::vector<double> resample(const std::vector<double>& in, int from_rate, int to_rate);

// decode_wav + rate policy: exact 16 kHz required unless allow_resample.
AudioSignal decode_audio(const std::string& path, bool allow_resample);

}  // namespace rhythmlab
