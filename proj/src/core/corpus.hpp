#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/features.hpp"

namespace rhythmlab {

struct ManifestEntry {
    std::string path;
    std::string language;
    std::string speaker_id;
    std::string source;
};

struct CorpusIndex {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> languages;  // dense label order

    int language_index(const std::string& tag) const;
};

// JSON Lines, one object per line with fields path/language/speaker_id/source.
// When fixed_languages is non-empty, unknown language tags are an error;
// otherwise labels are assigned in first-seen order.
CorpusIndex load_manifest(const std::string& path,
                          const std::vector<std::string>& fixed_languages = {});

struct SegmentRecord {
    FeatureSequence features;  // exactly 312 frames
    int language = -1;
    std::string speaker_id;
    std::string source;
};

inline constexpr double kSegmentSeconds = 10.0;
inline constexpr double kPauseSeconds = 0.3;
inline constexpr int kSegmentFrames = 312;  // floor(10 s * 16 kHz / 512)

struct AssemblyResult {
    std::vector<SegmentRecord> segments;
    std::vector<std::string> file_errors;  // per-file decode failures, processing continued
};

// Cuts each group's audio into 10-second segments: files of at least 10 s are
// cut independently; shorter files of the same (speaker, source) group are
// concatenated in manifest order with a 0.3 s pause in between. Remainders
// under 10 s are dropped. Audio is amplitude-normalized per file.
AssemblyResult assemble_segments(const CorpusIndex& index, const FeatureConfig& config = {},
                                 int jobs = 1);

struct SplitResult {
    std::vector<size_t> train;  // indices into the segment vector
    std::vector<size_t> test;
};

// Speaker-disjoint split: per language, shuffled speakers are moved into the
// test set until its share reaches test_fraction.
SplitResult split_train_test(const std::vector<SegmentRecord>& segments, double test_fraction,
                             uint64_t seed);

struct WeightConfig {
    double k1 = 20.0;
    double k2 = 5.0;
};

// Saturating language/speaker weights: with n(s) recordings for speaker s and
// n_spk = sum_s n(s)/(K1+n(s)) within a language, each segment of s weighs
// 1/(K2+n_spk) * 1/(K1+n(s)).
std::vector<double> compute_sample_weights(const std::vector<SegmentRecord>& segments,
                                           const std::vector<size_t>& subset,
                                           const WeightConfig& config = {});

// Feature cache: a directory of RFE1 files plus index.json.
void save_segment_cache(const std::vector<SegmentRecord>& segments,
                        const std::vector<std::string>& languages, const std::string& dir);

struct SegmentCache {
    std::vector<SegmentRecord> segments;
    std::vector<std::string> languages;
};

SegmentCache load_segment_cache(const std::string& dir);

}  // namespace rhythmlab
