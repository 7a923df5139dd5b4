#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "core/common.hpp"
#include "core/wav.hpp"

namespace rhythmlab {

namespace fs = std::filesystem;

namespace {

constexpr int kRate = 16000;
constexpr size_t kSegmentLen = 10 * kRate;

struct ClassParams {
    const char* name;
    double cycle;        // seconds per syllable cycle
    double jitter;       // relative sd of cycle duration
    double onset_frac;   // leading noise-burst share of the cycle
    double gap_frac;     // trailing silence share of the cycle
    bool alternate;      // strong/weak stress groups
    int pause_every;     // syllables between long pauses (0 = never)
    double pause_len;    // seconds
};

const ClassParams kClasses[3] = {
    {"pulse5", 0.200, 0.04, 0.30, 0.08, false, 0, 0.0},
    {"stress4", 0.180, 0.25, 0.30, 0.05, true, 0, 0.0},
    {"gap8", 0.125, 0.04, 0.25, 0.32, false, 6, 0.15},
};

struct Speaker {
    double tilt;        // one-pole coefficient for the voiced source
    double noise_tilt;  // blend of raw vs lowpassed noise for onsets
    double f0;          // base pitch, Hz
    double rate;        // duration multiplier
};

Speaker make_speaker(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Speaker s;
    s.tilt = 0.55 + 0.35 * unit(rng);
    s.noise_tilt = 0.2 + 0.6 * unit(rng);
    s.f0 = 100.0 + 120.0 * unit(rng);
    s.rate = std::exp(std::normal_distribution<double>(0.0, 0.05)(rng));
    return s;
}

class SyllableRenderer {
public:
    SyllableRenderer(const Speaker& speaker, std::mt19937_64& rng)
        : speaker_(speaker), rng_(rng) {}

    void render(std::vector<double>& out, size_t& pos, double onset_s, double vowel_s,
                double amplitude) {
        const size_t onset_n = static_cast<size_t>(onset_s * kRate);
        const size_t vowel_n = static_cast<size_t>(vowel_s * kRate);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::normal_distribution<double> pitch_jitter(0.0, 0.03);
        const double f0 = speaker_.f0 * (1.0 + pitch_jitter(rng_));

        for (size_t i = 0; i < onset_n && pos < out.size(); ++i, ++pos) {
            const double raw = unit(rng_);
            lp_noise_ = 0.85 * lp_noise_ + 0.15 * raw;
            const double shaped = speaker_.noise_tilt * lp_noise_ * 4.0 +
                                  (1.0 - speaker_.noise_tilt) * raw;
            out[pos] = amplitude * 0.5 * envelope(i, onset_n) * shaped;
        }
        for (size_t i = 0; i < vowel_n && pos < out.size(); ++i, ++pos) {
            phase_ += f0 / kRate;
            phase_ -= std::floor(phase_);
            const double saw = 2.0 * phase_ - 1.0;
            lp_voice_ = speaker_.tilt * lp_voice_ + (1.0 - speaker_.tilt) * saw;
            out[pos] = amplitude * envelope(i, vowel_n) * lp_voice_ * 2.5;
        }
    }

private:
    static double envelope(size_t i, size_t n) {
        const size_t ramp = std::min<size_t>(80, n / 4);  // 5 ms edges
        if (i < ramp) return 0.5 - 0.5 * std::cos(M_PI * i / ramp);
        if (n - i <= ramp) return 0.5 - 0.5 * std::cos(M_PI * (n - i) / ramp);
        return 1.0;
    }

    const Speaker& speaker_;
    std::mt19937_64& rng_;
    double phase_ = 0.0;
    double lp_voice_ = 0.0;
    double lp_noise_ = 0.0;
};

std::vector<double> render_segment(const ClassParams& cls, const Speaker& speaker,
                                   std::mt19937_64& rng) {
    std::vector<double> out(kSegmentLen, 0.0);
    SyllableRenderer renderer(speaker, rng);
    std::normal_distribution<double> jitter(1.0, cls.jitter);
    std::uniform_int_distribution<int> weak_count(1, 3);

    size_t pos = 0;
    int syllable = 0;
    int group_left = 0;
    bool stressed = true;
    while (pos < out.size()) {
        double scale = std::max(0.4, jitter(rng)) * speaker.rate;
        double amplitude = 0.32;
        if (cls.alternate) {
            if (group_left == 0) {
                stressed = true;
                group_left = weak_count(rng);
            } else {
                stressed = false;
                --group_left;
            }
            scale *= stressed ? 1.6 : 0.7;
            amplitude = stressed ? 0.45 : 0.16;
        }
        const double cycle = cls.cycle * scale;
        const double onset = cycle * cls.onset_frac;
        const double gap = cycle * cls.gap_frac;
        const double vowel = std::max(0.02, cycle - onset - gap);

        renderer.render(out, pos, onset, vowel, amplitude);
        pos += static_cast<size_t>(gap * kRate);

        ++syllable;
        if (cls.pause_every > 0 && syllable % cls.pause_every == 0)
            pos += static_cast<size_t>(cls.pause_len * kRate);
    }

    double peak = 1e-9;
    for (double v : out) peak = std::max(peak, std::abs(v));
    if (peak > 0.95)
        for (double& v : out) v *= 0.95 / peak;
    return out;
}

}  // namespace

SynthResult synthesize_corpus(const std::string& out_dir, const SynthOptions& options) {
    if (options.segments_per_language < 1 || options.speakers_per_language < 1)
        throw Error::invalid("segment and speaker counts must be positive");
    if (options.segments_per_language < options.speakers_per_language)
        throw Error::invalid("need at least one segment per speaker");

    fs::create_directories(fs::path(out_dir) / "wav");
    const std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
    std::ofstream manifest(manifest_path);
    if (!manifest) throw Error::io("cannot write manifest: " + manifest_path);

    SynthResult result;
    result.manifest_path = manifest_path;

    for (int lang = 0; lang < 3; ++lang) {
        const ClassParams& cls = kClasses[lang];
        for (int spk = 0; spk < options.speakers_per_language; ++spk) {
            auto speaker_rng = make_rng(mix_seed(options.seed,
                                                 mix_seed(hash_tag(cls.name),
                                                          static_cast<uint64_t>(spk))));
            const Speaker speaker = make_speaker(speaker_rng);

            const int base = options.segments_per_language / options.speakers_per_language;
            const int extra = spk < options.segments_per_language % options.speakers_per_language;
            for (int seg = 0; seg < base + extra; ++seg) {
                auto rng = make_rng(mix_seed(options.seed,
                                             mix_seed(hash_tag(cls.name),
                                                      mix_seed(static_cast<uint64_t>(spk),
                                                               static_cast<uint64_t>(seg)))));
                const std::vector<double> audio = render_segment(cls, speaker, rng);
                const std::string rel = strfmt("wav/%s_spk%02d_%03d.wav", cls.name, spk, seg);
                write_wav_16((fs::path(out_dir) / rel).string(), audio, kRate);

                manifest << "{\"path\": \"" << rel << "\", \"language\": \"" << cls.name
                         << "\", \"speaker_id\": \"" << cls.name << "_spk"
                         << strfmt("%02d", spk) << "\", \"source\": \"synth\"}\n";
                ++result.files;
            }
        }
    }
    if (!manifest) throw Error::io("short write: " + manifest_path);
    log_info(strfmt("synthesized %d segments under %s", result.files, out_dir.c_str()));
    return result;
}

}  // namespace rhythmlab
