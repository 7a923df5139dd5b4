#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "core/common.hpp"
#include "core/dsp.hpp"
#include "core/features.hpp"
#include "core/wav.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace rhythmlab;

namespace {

std::vector<double> sine(double hz, double amplitude, double seconds, int rate = 16000) {
    std::vector<double> x(static_cast<size_t>(seconds * rate));
    for (size_t n = 0; n < x.size(); ++n)
        x[n] = amplitude * std::sin(2.0 * M_PI * hz * static_cast<double>(n) / rate);
    return x;
}

AudioSignal signal_of(std::vector<double> samples, int rate = 16000) {
    AudioSignal s;
    s.samples = std::move(samples);
    s.sample_rate = rate;
    return s;
}

// Minimal 16-bit stereo writer for decode tests.
void write_stereo_wav(const std::string& path, const std::vector<double>& left,
                      const std::vector<double>& right, int rate) {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
    const uint32_t data_len = static_cast<uint32_t>(left.size() * 4);
    out.write("RIFF", 4);
    u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(2);
    u32(static_cast<uint32_t>(rate));
    u32(static_cast<uint32_t>(rate) * 4);
    u16(4);
    u16(16);
    out.write("data", 4);
    u32(data_len);
    for (size_t i = 0; i < left.size(); ++i) {
        const int16_t l = static_cast<int16_t>(std::lrint(left[i] * 32767.0));
        const int16_t r = static_cast<int16_t>(std::lrint(right[i] * 32767.0));
        out.write(reinterpret_cast<const char*>(&l), 2);
        out.write(reinterpret_cast<const char*>(&r), 2);
    }
}

// Steady-state gain of the pre-emphasis filter on a pure tone, measured with
// a single-bin DFT over an integer number of cycles.
double measured_gain_db(double hz) {
    const AudioSignal in = signal_of(sine(hz, 0.5, 1.5));
    const AudioSignal out = apply_preemphasis(in);
    const double a_in = test_support::goertzel_amplitude(in.samples, hz, 16000, 8000, 16000);
    const double a_out = test_support::goertzel_amplitude(out.samples, hz, 16000, 8000, 16000);
    return 20.0 * std::log10(a_out / a_in);
}

}  // namespace

TEST_CASE("decode 16-bit mono silence") {
    test_support::TempDir dir;
    const std::string path = dir.path("silence.wav");
    write_wav_16(path, std::vector<double>(16000, 0.0), 16000);
    const AudioSignal sig = decode_wav(path);
    CHECK(sig.sample_rate == 16000);
    REQUIRE(sig.samples.size() == 16000);
    for (double s : sig.samples) CHECK(s == 0.0);
}

TEST_CASE("stereo channels average to mono") {
    test_support::TempDir dir;
    const std::string path = dir.path("stereo.wav");
    write_stereo_wav(path, std::vector<double>(4000, 0.5), std::vector<double>(4000, -0.5), 16000);
    const AudioSignal sig = decode_wav(path);
    REQUIRE(sig.samples.size() == 4000);
    for (double s : sig.samples) CHECK(std::abs(s) < 1e-4);
}

TEST_CASE("decode rejects garbage and wrong rates") {
    test_support::TempDir dir;
    const std::string bad = dir.file("bad.wav", "this is not audio");
    CHECK_THROWS_AS(decode_wav(bad), Error);
    const std::string wrong_rate = dir.path("w.wav");
    write_wav_16(wrong_rate, sine(440, 0.5, 0.2, 44100), 44100);
    CHECK_THROWS_WITH_AS(decode_audio(wrong_rate, false), doctest::Contains("44100"), Error);
    CHECK_THROWS_AS(decode_wav(dir.path("missing.wav")), Error);
}

TEST_CASE("resampling preserves length ratio and tone frequency") {
    test_support::TempDir dir;
    const std::string path = dir.path("hi.wav");
    const std::vector<double> src = sine(1000, 0.5, 0.7, 44100);
    write_wav_16(path, src, 44100);
    const AudioSignal sig = decode_audio(path, true);
    CHECK(sig.sample_rate == 16000);
    CHECK(sig.samples.size() ==
          static_cast<size_t>(std::llround(static_cast<double>(src.size()) * 16000.0 / 44100.0)));
    // the 1 kHz component survives at full amplitude, away from the edges
    const double amp = test_support::goertzel_amplitude(sig.samples, 1000, 16000, 2000, 8000);
    CHECK(amp == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normalize_amplitude targets RMS 0.1") {
    const AudioSignal unit = signal_of(sine(440, 1.0, 1.0));
    const AudioSignal norm = normalize_amplitude(unit);
    const double expected_gain = 0.1 / std::sqrt(0.5);
    CHECK(norm.samples[123] == doctest::Approx(unit.samples[123] * expected_gain).epsilon(1e-6));

    double sumsq = 0.0;
    for (double s : norm.samples) sumsq += s * s;
    CHECK(std::sqrt(sumsq / norm.samples.size()) == doctest::Approx(0.1).epsilon(1e-9));

    const AudioSignal again = normalize_amplitude(norm);
    for (size_t i = 0; i < 100; ++i)
        CHECK(std::abs(again.samples[i] - norm.samples[i]) < 1e-9);

    const AudioSignal silent = signal_of(std::vector<double>(100, 0.0));
    const AudioSignal still_silent = normalize_amplitude(silent);
    for (double s : still_silent.samples) CHECK(s == 0.0);
}

TEST_CASE("pre-emphasis gain matches the analytic responses") {
    const FilterSpec filter;

    // continuous-time prototype values
    CHECK(filter.analog_gain(3000) == doctest::Approx(std::pow(10, 22.2 / 20)).epsilon(0.01));

    // measured vs continuous-time: 3 kHz carries ~0.8 dB of bilinear warping
    CHECK(measured_gain_db(3000) ==
          doctest::Approx(20 * std::log10(filter.analog_gain(3000))).epsilon(0.045));
    CHECK(std::abs(measured_gain_db(100) - 0.97) < 0.3);

    // measured vs the warped discrete response: tight
    for (double hz : {50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 7000.0}) {
        const double analytic_db = 20.0 * std::log10(filter.discrete_gain(hz));
        CHECK(std::abs(measured_gain_db(hz) - analytic_db) < 0.1);
    }

    // high-frequency plateau: around +20 dB and below the 28 dB asymptote
    for (double hz : {2000.0, 3000.0, 5000.0, 7000.0, 7900.0}) {
        const double db = measured_gain_db(hz);
        CHECK(db >= 17.0);
        CHECK(db <= 28.0);
    }
    CHECK(20.0 * std::log10(5000.0 / 200.0) == doctest::Approx(27.96).epsilon(0.001));
}

TEST_CASE("pre-emphasis is linear") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::vector<double> x(3000);
    for (double& v : x) v = amp(rng);
    const AudioSignal base = signal_of(x);
    for (double& v : x) v *= 0.37;
    const AudioSignal scaled_in = signal_of(x);

    const AudioSignal y = apply_preemphasis(base);
    const AudioSignal y_scaled = apply_preemphasis(scaled_in);
    for (size_t i = 0; i < y.samples.size(); ++i) {
        CHECK(std::abs(y_scaled.samples[i] - 0.37 * y.samples[i]) <=
              1e-9 * std::max(1.0, std::abs(y.samples[i])));
    }
}

TEST_CASE("frame_spl framing and levels") {
    CHECK_THROWS_AS(frame_spl(signal_of(std::vector<double>(511, 0.1))), Error);

    const auto two = frame_spl(signal_of(std::vector<double>(1024, 0.25)));
    CHECK(two.size() == 2);

    const auto full_scale = frame_spl(signal_of(sine(250, 1.0, 1.0)));
    for (double db : full_scale) CHECK(db == doctest::Approx(10 * std::log10(0.5)).epsilon(1e-3));

    const auto silent = frame_spl(signal_of(std::vector<double>(2048, 0.0)));
    for (double db : silent) CHECK(db == doctest::Approx(-100.0));
}

TEST_CASE("voicing detection") {
    const AudioSignal tone = signal_of(sine(200, 0.14, 1.0));
    const VoicingResult v = detect_voicing(tone);
    for (size_t f = 0; f < v.voiced.size(); ++f) {
        CHECK(v.voiced[f] == 1.0);
        CHECK(std::abs(v.f0[f] - 200.0) <= 3.0);
    }

    const AudioSignal silence = signal_of(std::vector<double>(4096, 0.0));
    const VoicingResult s = detect_voicing(silence);
    for (size_t f = 0; f < s.voiced.size(); ++f) {
        CHECK(s.voiced[f] == 0.0);
        CHECK(s.f0[f] == 0.0);
    }

    long voiced = 0, frames = 0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> amp(-0.3, 0.3);
        std::vector<double> noise(8192);
        for (double& x : noise) x = amp(rng);
        const VoicingResult r = detect_voicing(signal_of(std::move(noise)));
        for (double flag : r.voiced) {
            voiced += flag > 0.5;
            ++frames;
        }
    }
    CHECK(static_cast<double>(voiced) / frames < 0.05);
}

TEST_CASE("extract_features composition") {
    FeatureConfig config;

    const FeatureSequence silent = extract_features(signal_of(std::vector<double>(5120, 0.0)), config);
    CHECK(silent.frames() == 10);
    for (Eigen::Index t = 0; t < silent.frames(); ++t) {
        CHECK(silent.levels(t, 0) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(silent.levels(t, 2) == 0.0);
        CHECK(silent.deltas.row(t).norm() == doctest::Approx(0.0));
    }

    // reference-level tone: RMS 0.1 -> -20 dB -> 0.75 after the affine map
    const FeatureSequence tone = extract_features(signal_of(sine(250, 0.5, 1.0)), config);
    for (Eigen::Index t = 0; t < tone.frames(); ++t)
        CHECK(tone.levels(t, 0) == doctest::Approx(0.75).epsilon(1e-4));

    // frame count = floor(n/512) for arbitrary lengths
    for (size_t n : {512u, 513u, 1023u, 4096u, 5000u}) {
        const FeatureSequence f =
            extract_features(signal_of(std::vector<double>(n, 0.01)), config);
        CHECK(f.frames() == static_cast<Eigen::Index>(n / 512));
    }
}

TEST_CASE("features stay in range and deltas start at zero") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> amp(-0.9, 0.9);
    std::vector<double> x(16000);
    for (double& v : x) v = amp(rng);
    const FeatureSequence f = extract_features(signal_of(std::move(x)));
    CHECK(f.deltas.row(0).norm() == 0.0);
    for (Eigen::Index t = 0; t < f.frames(); ++t) {
        for (int c = 0; c < 2; ++c) {
            CHECK(f.levels(t, c) >= 0.0);
            CHECK(f.levels(t, c) <= 1.0);
        }
        CHECK((f.levels(t, 2) == 0.0 || f.levels(t, 2) == 1.0));
    }
}

TEST_CASE("extraction is deterministic") {
    const AudioSignal sig = signal_of(sine(173, 0.4, 1.0));
    const FeatureSequence a = extract_features(sig);
    const FeatureSequence b = extract_features(sig);
    CHECK((a.levels - b.levels).norm() == 0.0);
    CHECK((a.deltas - b.deltas).norm() == 0.0);
}

TEST_CASE("feature file round trip and csv export") {
    test_support::TempDir dir;
    FeatureConfig config;
    config.include_f0 = true;
    const FeatureSequence seq = extract_features(signal_of(sine(200, 0.5, 1.0)), config);
    REQUIRE(seq.dims() == 7);

    const std::string path = dir.path("f.rfe");
    save_features(seq, path);
    const FeatureSequence loaded = load_features(path);
    CHECK(loaded.frames() == seq.frames());
    CHECK(loaded.dims() == 7);
    CHECK((loaded.levels.cast<float>() - seq.levels.cast<float>()).norm() == 0.0f);

    // second save is byte-identical
    const std::string path2 = dir.path("g.rfe");
    save_features(loaded, path2);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);

    const std::string csv = dir.path("f.csv");
    export_features_csv(seq, csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "spl,splh,voiced,d_spl,d_splh,d_voiced,f0");

    const std::string bad = dir.file("bad.rfe", "XXXX????");
    CHECK_THROWS_WITH_AS(load_features(bad), doctest::Contains("magic"), Error);
}
