#include "core/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "core/common.hpp"

namespace rhythmlab {

namespace fs = std::filesystem;
using nlohmann::json;

int CorpusIndex::language_index(const std::string& tag) const {
    for (size_t i = 0; i < languages.size(); ++i)
        if (languages[i] == tag) return static_cast<int>(i);
    return -1;
}

CorpusIndex load_manifest(const std::string& path, const std::vector<std::string>& fixed_languages) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open manifest: " + path);

    CorpusIndex index;
    index.languages = fixed_languages;
    std::set<std::string> seen_paths;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw Error::format(strfmt("%s:%d: invalid JSON: %s", path.c_str(), line_no, e.what()));
        }
        ManifestEntry entry;
        for (const char* field : {"path", "language", "speaker_id", "source"}) {
            if (!obj.contains(field) || !obj[field].is_string())
                throw Error::validation(strfmt("%s:%d: missing or non-string field \"%s\"",
                                               path.c_str(), line_no, field));
        }
        entry.path = obj["path"].get<std::string>();
        entry.language = obj["language"].get<std::string>();
        entry.speaker_id = obj["speaker_id"].get<std::string>();
        entry.source = obj["source"].get<std::string>();

        if (!fixed_languages.empty() && index.language_index(entry.language) < 0) {
            throw Error::validation(strfmt("%s:%d: language \"%s\" not in the supplied list",
                                           path.c_str(), line_no, entry.language.c_str()));
        }
        if (fixed_languages.empty() && index.language_index(entry.language) < 0)
            index.languages.push_back(entry.language);
        if (!seen_paths.insert(entry.path).second)
            log_warn(strfmt("%s:%d: duplicate path \"%s\"", path.c_str(), line_no, entry.path.c_str()));

        // Relative manifest paths resolve against the manifest's directory.
        if (!entry.path.empty() && entry.path[0] != '/') {
            entry.path = (fs::path(path).parent_path() / entry.path).string();
        }
        index.entries.push_back(std::move(entry));
    }
    if (index.entries.empty()) throw Error::validation(path + ": empty manifest");
    return index;
}

namespace {

constexpr size_t kSegmentSamples = static_cast<size_t>(kSegmentSeconds * kTargetSampleRate);
constexpr size_t kPauseSamples = static_cast<size_t>(kPauseSeconds * kTargetSampleRate);

struct GroupKey {
    std::string speaker;
    std::string source;
    bool operator<(const GroupKey& o) const {
        return speaker != o.speaker ? speaker < o.speaker : source < o.source;
    }
};

struct GroupTask {
    int language = -1;
    GroupKey key;
    std::vector<const ManifestEntry*> files;  // manifest order
};

void cut_stream(const std::vector<double>& stream, const GroupTask& group,
                const FeatureConfig& feature_config, std::vector<SegmentRecord>& out) {
    FeatureConfig per_segment = feature_config;
    per_segment.normalize = false;  // audio was normalized per source file
    const size_t n_segments = stream.size() / kSegmentSamples;
    for (size_t s = 0; s < n_segments; ++s) {
        AudioSignal segment;
        segment.sample_rate = kTargetSampleRate;
        segment.samples.assign(stream.begin() + static_cast<long>(s * kSegmentSamples),
                               stream.begin() + static_cast<long>((s + 1) * kSegmentSamples));
        SegmentRecord record;
        record.features = extract_features(segment, per_segment);
        record.language = group.language;
        record.speaker_id = group.key.speaker;
        record.source = group.key.source;
        out.push_back(std::move(record));
    }
}

void process_group(const GroupTask& group, const FeatureConfig& config,
                   std::vector<SegmentRecord>& out, std::vector<std::string>& errors) {
    std::vector<double> short_stream;
    for (const ManifestEntry* entry : group.files) {
        AudioSignal audio;
        try {
            audio = decode_audio(entry->path, config.resample);
            if (audio.samples.empty()) throw Error::validation("empty audio");
            if (config.normalize) audio = normalize_amplitude(audio);
        } catch (const Error& e) {
            errors.push_back(entry->path + ": " + e.what());
            continue;
        }
        if (audio.samples.size() >= kSegmentSamples) {
            cut_stream(audio.samples, group, config, out);
        } else {
            if (!short_stream.empty()) short_stream.resize(short_stream.size() + kPauseSamples, 0.0);
            short_stream.insert(short_stream.end(), audio.samples.begin(), audio.samples.end());
        }
    }
    if (short_stream.size() >= kSegmentSamples) cut_stream(short_stream, group, config, out);
}

}  // namespace

AssemblyResult assemble_segments(const CorpusIndex& index, const FeatureConfig& config, int jobs) {
    std::map<std::pair<int, GroupKey>, GroupTask> groups;
    for (const ManifestEntry& entry : index.entries) {
        const int lang = index.language_index(entry.language);
        GroupKey key{entry.speaker_id, entry.source};
        GroupTask& task = groups[{lang, key}];
        task.language = lang;
        task.key = key;
        task.files.push_back(&entry);
    }
    std::vector<GroupTask> tasks;
    tasks.reserve(groups.size());
    for (auto& [key, task] : groups) tasks.push_back(std::move(task));

    AssemblyResult result;
    if (jobs <= 1 || tasks.size() <= 1) {
        for (const GroupTask& task : tasks)
            process_group(task, config, result.segments, result.file_errors);
    } else {
        const int n_workers = std::min<int>(jobs, static_cast<int>(tasks.size()));
        std::vector<std::vector<SegmentRecord>> segment_parts(tasks.size());
        std::vector<std::vector<std::string>> error_parts(tasks.size());
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
                process_group(tasks[i], config, segment_parts[i], error_parts[i]);
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (size_t i = 0; i < tasks.size(); ++i) {
            for (auto& s : segment_parts[i]) result.segments.push_back(std::move(s));
            for (auto& e : error_parts[i]) result.file_errors.push_back(std::move(e));
        }
    }
    for (const std::string& e : result.file_errors) log_warn("skipped " + e);
    return result;
}

SplitResult split_train_test(const std::vector<SegmentRecord>& segments, double test_fraction,
                             uint64_t seed) {
    if (!(test_fraction > 0.0) || test_fraction >= 1.0)
        throw Error::invalid("test_fraction must be in (0, 1)");

    // language -> speaker -> segment indices
    std::map<int, std::map<std::string, std::vector<size_t>>> by_language;
    for (size_t i = 0; i < segments.size(); ++i)
        by_language[segments[i].language][segments[i].speaker_id].push_back(i);

    std::vector<std::string> offenders;
    for (const auto& [lang, speakers] : by_language)
        if (speakers.size() < 2) offenders.push_back(strfmt("language %d", lang));
    if (!offenders.empty()) {
        std::string joined;
        for (const auto& o : offenders) joined += (joined.empty() ? "" : ", ") + o;
        throw Error::validation("cannot split by speaker, single-speaker languages: " + joined);
    }

    SplitResult split;
    for (const auto& [lang, speakers] : by_language) {
        std::vector<std::string> names;
        size_t total = 0;
        for (const auto& [name, idx] : speakers) {
            names.push_back(name);
            total += idx.size();
        }
        auto rng = make_rng(mix_seed(seed, mix_seed(hash_tag("split"), static_cast<uint64_t>(lang))));
        std::shuffle(names.begin(), names.end(), rng);

        const double want = test_fraction * static_cast<double>(total);
        size_t test_count = 0;
        std::set<std::string> test_speakers;
        for (const std::string& name : names) {
            if (static_cast<double>(test_count) >= want) break;
            if (test_speakers.size() + 1 == names.size())
                throw Error::validation(strfmt("test_fraction %.3f leaves no train speakers for language %d",
                                               test_fraction, lang));
            test_speakers.insert(name);
            test_count += speakers.at(name).size();
        }
        for (const auto& [name, idx] : speakers) {
            auto& dest = test_speakers.count(name) ? split.test : split.train;
            dest.insert(dest.end(), idx.begin(), idx.end());
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<double> compute_sample_weights(const std::vector<SegmentRecord>& segments,
                                           const std::vector<size_t>& subset,
                                           const WeightConfig& config) {
    std::map<int, std::map<std::string, double>> counts;  // language -> speaker -> n(s)
    for (size_t i : subset) counts[segments[i].language][segments[i].speaker_id] += 1.0;

    std::map<int, double> n_spk;
    for (const auto& [lang, speakers] : counts) {
        double acc = 0.0;
        for (const auto& [name, n] : speakers) acc += n / (config.k1 + n);
        n_spk[lang] = acc;
    }

    std::vector<double> weights(subset.size());
    for (size_t j = 0; j < subset.size(); ++j) {
        const SegmentRecord& seg = segments[subset[j]];
        const double n = counts[seg.language][seg.speaker_id];
        weights[j] = 1.0 / (config.k2 + n_spk[seg.language]) * 1.0 / (config.k1 + n);
    }
    return weights;
}

void save_segment_cache(const std::vector<SegmentRecord>& segments,
                        const std::vector<std::string>& languages, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "segments");
    json index;
    index["languages"] = languages;
    index["segments"] = json::array();
    for (size_t i = 0; i < segments.size(); ++i) {
        const std::string rel = strfmt("segments/seg_%06zu.rfe", i);
        save_features(segments[i].features, (fs::path(dir) / rel).string());
        json entry;
        entry["file"] = rel;
        entry["language"] = languages.at(static_cast<size_t>(segments[i].language));
        entry["speaker_id"] = segments[i].speaker_id;
        entry["source"] = segments[i].source;
        index["segments"].push_back(std::move(entry));
    }
    std::ofstream out(fs::path(dir) / "index.json");
    if (!out) throw Error::io("cannot write cache index in " + dir);
    out << index.dump(1) << "\n";
}

SegmentCache load_segment_cache(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "index.json");
    if (!in) throw Error::io("cannot open cache index in " + dir);
    json index;
    try {
        in >> index;
    } catch (const json::exception& e) {
        throw Error::format(strfmt("%s/index.json: %s", dir.c_str(), e.what()));
    }
    SegmentCache cache;
    cache.languages = index.at("languages").get<std::vector<std::string>>();
    for (const json& entry : index.at("segments")) {
        SegmentRecord record;
        record.features = load_features((fs::path(dir) / entry.at("file").get<std::string>()).string());
        const std::string tag = entry.at("language").get<std::string>();
        auto it = std::find(cache.languages.begin(), cache.languages.end(), tag);
        if (it == cache.languages.end())
            throw Error::format("cache index references unknown language " + tag);
        record.language = static_cast<int>(it - cache.languages.begin());
        record.speaker_id = entry.at("speaker_id").get<std::string>();
        record.source = entry.at("source").get<std::string>();
        cache.segments.push_back(std::move(record));
    }
    if (cache.segments.empty()) throw Error::validation(dir + ": empty segment cache");
    return cache;
}

}  // namespace rhythmlab
