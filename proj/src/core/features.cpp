#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "core/common.hpp"

namespace rhythmlab {

void FeatureSequence::recompute_deltas() {
    deltas.resize(levels.rows(), levels.cols());
    if (levels.rows() == 0) return;
    deltas.row(0).setZero();
    for (Eigen::Index t = 1; t < levels.rows(); ++t)
        deltas.row(t) = levels.row(t) - levels.row(t - 1);
}

double spl_to_unit(double spl_db) {
    return std::clamp((spl_db - kSplRangeLow) / (kSplRangeHigh - kSplRangeLow), 0.0, 1.0);
}

FeatureSequence extract_features(const AudioSignal& signal, const FeatureConfig& config) {
    if (signal.samples.empty()) throw Error::invalid("cannot extract features from an empty signal");
    const AudioSignal base = config.normalize ? normalize_amplitude(signal) : signal;

    const std::vector<double> spl = frame_spl(base);
    const std::vector<double> splh = frame_spl(apply_preemphasis(base));
    const VoicingResult voicing = detect_voicing(base, config.voicing);

    const Eigen::Index n = static_cast<Eigen::Index>(spl.size());
    FeatureSequence seq;
    seq.levels.resize(n, 3);
    for (Eigen::Index t = 0; t < n; ++t) {
        seq.levels(t, 0) = spl_to_unit(spl[static_cast<size_t>(t)]);
        seq.levels(t, 1) = spl_to_unit(splh[static_cast<size_t>(t)]);
        seq.levels(t, 2) = voicing.voiced[static_cast<size_t>(t)];
    }
    seq.recompute_deltas();
    if (config.include_f0) {
        seq.f0 = Eigen::Map<const Eigen::VectorXd>(voicing.f0.data(), n);
    }
    return seq;
}

FeatureSequence extract_features_file(const std::string& path, const FeatureConfig& config) {
    return extract_features(decode_audio(path, config.resample), config);
}

namespace {

constexpr char kFeatureMagic[4] = {'R', 'F', 'E', '1'};

void put_u32(std::ofstream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::ifstream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error::format("truncated feature file: " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_features(const FeatureSequence& seq, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot write feature file: " + path);
    out.write(kFeatureMagic, 4);
    const uint32_t n = static_cast<uint32_t>(seq.frames());
    const uint32_t dims = static_cast<uint32_t>(seq.dims());
    put_u32(out, n);
    put_u32(out, dims);
    std::vector<float> row(dims);
    for (Eigen::Index t = 0; t < seq.frames(); ++t) {
        for (int c = 0; c < 3; ++c) row[static_cast<size_t>(c)] = static_cast<float>(seq.levels(t, c));
        for (int c = 0; c < 3; ++c) row[static_cast<size_t>(3 + c)] = static_cast<float>(seq.deltas(t, c));
        if (dims == 7) row[6] = static_cast<float>(seq.f0(t));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(float) * dims));
    }
    if (!out) throw Error::io("short write: " + path);
}

FeatureSequence load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open feature file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw Error::format("bad feature file magic: " + path);
    const uint32_t n = get_u32(in, path);
    const uint32_t dims = get_u32(in, path);
    if (dims != 6 && dims != 7)
        throw Error::format(strfmt("%s: unsupported feature dimension %u", path.c_str(), dims));

    FeatureSequence seq;
    seq.levels.resize(n, 3);
    seq.deltas.resize(n, 3);
    if (dims == 7) seq.f0.resize(n);
    std::vector<float> row(dims);
    for (uint32_t t = 0; t < n; ++t) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float) * dims));
        if (!in) throw Error::format("truncated feature file: " + path);
        for (int c = 0; c < 3; ++c) seq.levels(t, c) = row[static_cast<size_t>(c)];
        for (int c = 0; c < 3; ++c) seq.deltas(t, c) = row[static_cast<size_t>(3 + c)];
        if (dims == 7) seq.f0(t) = row[6];
    }
    return seq;
}

void export_features_csv(const FeatureSequence& seq, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write csv file: " + path);
    out << "spl,splh,voiced,d_spl,d_splh,d_voiced";
    if (seq.has_f0()) out << ",f0";
    out << "\n";
    char buf[64];
    for (Eigen::Index t = 0; t < seq.frames(); ++t) {
        for (int c = 0; c < 3; ++c) {
            std::snprintf(buf, sizeof buf, "%.9g,", seq.levels(t, c));
            out << buf;
        }
        for (int c = 0; c < 3; ++c) {
            std::snprintf(buf, sizeof buf, c < 2 ? "%.9g," : "%.9g", seq.deltas(t, c));
            out << buf;
        }
        if (seq.has_f0()) {
            std::snprintf(buf, sizeof buf, ",%.9g", seq.f0(t));
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw Error::io("short write: " + path);
}

}  // namespace rhythmlab
