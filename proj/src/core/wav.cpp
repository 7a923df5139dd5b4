#include "core/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "core/common.hpp"

namespace rhythmlab {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;

}  // namespace

AudioSignal decode_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open audio file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error::format("not a RIFF/WAVE file: " + path);
    }

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const uint8_t* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const uint8_t* chunk = bytes.data() + pos;
        uint32_t chunk_len = read_u32(chunk + 4);
        const uint8_t* body = chunk + 8;
        if (pos + 8 + chunk_len > bytes.size())
            chunk_len = static_cast<uint32_t>(bytes.size() - pos - 8);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw Error::format("truncated fmt chunk: " + path);
            format = read_u16(body);
            channels = read_u16(body + 2);
            rate = read_u32(body + 4);
            bits = read_u16(body + 14);
            if (format == kFormatExtensible && chunk_len >= 40) {
                format = read_u16(body + 24);  // first two bytes of the sub-format GUID
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }

    if (rate == 0 || channels == 0) throw Error::format("missing fmt chunk: " + path);
    if (!data) throw Error::format("missing data chunk: " + path);
    if (channels > 2) throw Error::unsupported(strfmt("%u channels not supported: %s", channels, path.c_str()));

    const size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0) throw Error::format("zero-width samples: " + path);
    const size_t frame_bytes = bytes_per_sample * channels;
    const size_t n_frames = data_len / frame_bytes;

    auto decode_one = [&](const uint8_t* p) -> double {
        switch (format) {
            case kFormatPcm:
                switch (bits) {
                    case 8:
                        return (static_cast<int>(*p) - 128) / 128.0;
                    case 16: {
                        int16_t v;
                        std::memcpy(&v, p, 2);
                        return v / 32768.0;
                    }
                    case 24: {
                        int32_t v = (p[0] << 8) | (p[1] << 16) | (static_cast<int32_t>(p[2]) << 24);
                        return (v >> 8) / 8388608.0;
                    }
                    case 32: {
                        int32_t v;
                        std::memcpy(&v, p, 4);
                        return v / 2147483648.0;
                    }
                    default:
                        throw Error::unsupported(strfmt("%u-bit PCM not supported: %s", bits, path.c_str()));
                }
            case kFormatFloat:
                if (bits == 32) {
                    float v;
                    std::memcpy(&v, p, 4);
                    return v;
                }
                if (bits == 64) {
                    double v;
                    std::memcpy(&v, p, 8);
                    return v;
                }
                throw Error::unsupported(strfmt("%u-bit float not supported: %s", bits, path.c_str()));
            default:
                throw Error::unsupported(strfmt("WAV format tag %u not supported: %s", format, path.c_str()));
        }
    };

    AudioSignal out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        const uint8_t* frame = data + i * frame_bytes;
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) acc += decode_one(frame + c * bytes_per_sample);
        double v = acc / channels;
        if (!std::isfinite(v)) throw Error::format("non-finite sample in " + path);
        out.samples[i] = std::clamp(v, -1.0, 1.0);
    }
    return out;
}

void write_wav_16(const std::string& path, const std::vector<double>& samples, int sample_rate) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot write audio file: " + path);

    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](uint16_t v) {
        uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        out.write(reinterpret_cast<char*>(b), 2);
    };

    const uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(kFormatPcm);
    put_u16(1);
    put_u32(static_cast<uint32_t>(sample_rate));
    put_u32(static_cast<uint32_t>(sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (double s : samples) {
        double scaled = std::clamp(s, -1.0, 1.0) * 32767.0;
        int16_t v = static_cast<int16_t>(std::lrint(scaled));
        uint8_t b[2] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff)};
        out.write(reinterpret_cast<char*>(b), 2);
    }
    if (!out) throw Error::io("short write: " + path);
}

std::vector<double> resample(const std::vector<double>& in, int from_rate, int to_rate) {
    if (from_rate <= 0 || to_rate <= 0) throw Error::invalid("sample rates must be positive");
    if (from_rate == to_rate) return in;
    const double ratio = static_cast<double>(to_rate) / from_rate;
    const size_t out_len = static_cast<size_t>(std::llround(static_cast<double>(in.size()) * ratio));
    std::vector<double> out(out_len, 0.0);
    if (in.empty()) return out;

    // Hann-windowed sinc, cutoff slightly below the narrower Nyquist.
    const int half_taps = 32;
    const double cutoff = 0.95 * std::min(1.0, ratio);
    const double support = half_taps / std::min(1.0, ratio);

    for (size_t k = 0; k < out_len; ++k) {
        const double center = static_cast<double>(k) / ratio;
        const long lo = std::max<long>(0, static_cast<long>(std::ceil(center - support)));
        const long hi = std::min<long>(static_cast<long>(in.size()) - 1,
                                       static_cast<long>(std::floor(center + support)));
        double acc = 0.0, wsum = 0.0;
        for (long n = lo; n <= hi; ++n) {
            const double x = (n - center) * std::min(1.0, ratio);
            double sinc = (std::abs(x) < 1e-12) ? cutoff
                                                : std::sin(M_PI * cutoff * x) / (M_PI * x);
            const double w = 0.5 + 0.5 * std::cos(M_PI * x / half_taps);
            acc += in[static_cast<size_t>(n)] * sinc * w;
            wsum += sinc * w;
        }
        // Normalizing by the kernel sum keeps DC gain at 1 near the edges.
        out[k] = (std::abs(wsum) > 1e-9) ? acc / wsum : acc;
    }
    return out;
}

AudioSignal decode_audio(const std::string& path, bool allow_resample) {
    AudioSignal sig = decode_wav(path);
    if (sig.sample_rate != kTargetSampleRate) {
        if (!allow_resample) {
            throw Error::validation(strfmt("%s: sample rate %d != %d (pass the resample option)",
                                           path.c_str(), sig.sample_rate, kTargetSampleRate));
        }
        sig.samples = resample(sig.samples, sig.sample_rate, kTargetSampleRate);
        sig.sample_rate = kTargetSampleRate;
    }
    return sig;
}

}  // namespace rhythmlab
