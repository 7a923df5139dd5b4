#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/common.hpp"

namespace rhythmlab {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

CacheSummary cmd_build_cache(const std::string& manifest, const std::string& cache_dir,
                             const FeatureConfig& config, int jobs) {
    const CorpusIndex index = load_manifest(manifest);
    const AssemblyResult assembled = assemble_segments(index, config, jobs);
    if (assembled.segments.empty())
        throw Error::validation("no 10-second segments could be assembled from " + manifest);
    save_segment_cache(assembled.segments, index.languages, cache_dir);
    log_info(strfmt("cached %zu segments (%zu files failed)", assembled.segments.size(),
                    assembled.file_errors.size()));
    return {assembled.segments.size(), assembled.file_errors.size()};
}

namespace {

std::vector<size_t> all_indices(size_t n) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

std::vector<EpochLog> cmd_train(const std::string& cache_dir, const TrainConfig& config,
                                double test_fraction, const std::string& checkpoint_out,
                                const std::string& log_csv) {
    const SegmentCache cache = load_segment_cache(cache_dir);
    const SplitResult split = split_train_test(cache.segments, test_fraction, config.seed);
    const std::vector<double> weights = compute_sample_weights(cache.segments, split.train);

    LstmModel model = init_model(cache.languages, kDefaultHidden, config.seed);
    const std::vector<EpochLog> log = train(model, cache.segments, split.train, weights, config);

    model.train_config["test_fraction"] = test_fraction;
    save_checkpoint(model, checkpoint_out);

    if (!log_csv.empty()) {
        std::ofstream out(log_csv);
        if (!out) throw Error::io("cannot write csv file: " + log_csv);
        out << "epoch,lr,loss,accuracy,top3,seconds\n";
        for (const EpochLog& e : log)
            out << strfmt("%d,%.9g,%.9g,%.9g,%.9g,%.3f\n", e.epoch, e.lr, e.loss, e.accuracy,
                          e.top3, e.seconds);
    }

    const EvalResult test_eval = evaluate(model, cache.segments, split.test);
    log_info(strfmt("test accuracy %.4f, top-3 %.4f (%zu segments)", test_eval.accuracy,
                    test_eval.top3, split.test.size()));
    return log;
}

EvalResult cmd_evaluate(const std::string& checkpoint, const std::string& cache_dir,
                        const std::string& split, double test_fraction, int64_t split_seed,
                        const std::string& confusion_csv) {
    const LstmModel model = load_checkpoint(checkpoint);
    const SegmentCache cache = load_segment_cache(cache_dir);
    if (cache.languages != model.labels) {
        throw Error::validation(
            "cache languages do not match the checkpoint's label list; evaluate on a cache "
            "built from the same label set");
    }

    std::vector<size_t> subset;
    if (split == "all") {
        subset = all_indices(cache.segments.size());
    } else if (split == "train" || split == "test") {
        double fraction = test_fraction;
        uint64_t seed = 0;
        if (fraction < 0.0) {
            if (!model.train_config.contains("test_fraction"))
                throw Error::invalid("checkpoint lacks a recorded split; pass test_fraction");
            fraction = model.train_config["test_fraction"].get<double>();
        }
        if (split_seed >= 0) seed = static_cast<uint64_t>(split_seed);
        else if (model.train_config.contains("seed"))
            seed = model.train_config["seed"].get<uint64_t>();
        const SplitResult s = split_train_test(cache.segments, fraction, seed);
        subset = (split == "train") ? s.train : s.test;
    } else {
        throw Error::invalid("split must be train, test or all");
    }

    const EvalResult result = evaluate(model, cache.segments, subset);
    if (!confusion_csv.empty()) {
        std::ofstream out(confusion_csv);
        if (!out) throw Error::io("cannot write csv file: " + confusion_csv);
        out << "language";
        for (const std::string& l : model.labels) out << "," << l;
        out << "\n";
        const MatrixXd normalized = result.confusion_normalized();
        for (Index r = 0; r < normalized.rows(); ++r) {
            out << model.labels[static_cast<size_t>(r)];
            for (Index c = 0; c < normalized.cols(); ++c) out << strfmt(",%.6g", normalized(r, c));
            out << "\n";
        }
    }
    return result;
}

void cmd_histograms(const std::string& checkpoint, const std::string& cache_dir, int per_language,
                    int repeats, uint64_t seed, const std::string& out_histograms,
                    const std::string& out_vectors) {
    const LstmModel model = load_checkpoint(checkpoint);
    const SegmentCache cache = load_segment_cache(cache_dir);
    if (cache.languages != model.labels)
        throw Error::validation("cache languages do not match the checkpoint's label list");

    std::map<int, std::vector<size_t>> by_language;
    for (size_t i = 0; i < cache.segments.size(); ++i)
        by_language[cache.segments[i].language].push_back(i);

    long want = per_language;
    if (want <= 0) {
        want = std::numeric_limits<long>::max();
        for (const auto& [lang, idx] : by_language)
            want = std::min<long>(want, static_cast<long>(idx.size()));
    }

    std::vector<size_t> subset;
    for (auto& [lang, idx] : by_language) {
        if (static_cast<long>(idx.size()) < want)
            throw Error::validation(strfmt("language %s has %zu segments, need %ld",
                                           cache.languages[static_cast<size_t>(lang)].c_str(),
                                           idx.size(), want));
        auto rng = make_rng(mix_seed(seed, mix_seed(hash_tag("balanced"),
                                                    static_cast<uint64_t>(lang))));
        std::shuffle(idx.begin(), idx.end(), rng);
        subset.insert(subset.end(), idx.begin(), idx.begin() + want);
    }
    std::sort(subset.begin(), subset.end());

    const LanguageHistograms hist = collect_histograms(model, cache.segments, subset, seed, repeats);
    if (!out_histograms.empty()) save_histograms_csv(hist, out_histograms);
    if (!out_vectors.empty()) save_vectors_csv(hist, out_vectors);
}

void cmd_cluster(const std::string& histograms_csv, const std::string& measure,
                 const std::string& linkage, const std::string& out_tree,
                 const std::string& out_matrix) {
    const LanguageHistograms hist = load_histograms_csv(histograms_csv);
    const DissimilarityMatrix d = histogram_distances(hist, measure_from_name(measure));
    const Dendrogram tree = hierarchical_cluster(d, linkage_from_name(linkage));
    save_dendrogram_json(tree, out_tree);
    if (!out_matrix.empty()) save_dissimilarity_csv(d, out_matrix);
}

double cmd_mds(const std::string& histograms_csv, const std::string& measure, int dims,
               uint64_t seed, const std::string& out_coords) {
    const LanguageHistograms hist = load_histograms_csv(histograms_csv);
    const DissimilarityMatrix d = histogram_distances(hist, measure_from_name(measure));
    MdsOptions options;
    options.dims = dims;
    options.seed = seed;
    const MdsResult result = mds(d, options);

    std::ofstream out(out_coords);
    if (!out) throw Error::io("cannot write csv file: " + out_coords);
    out << "id,language";
    for (int c = 0; c < dims; ++c) out << (c == 0 ? ",x" : ",y");
    out << "\n";
    for (Index i = 0; i < result.coords.rows(); ++i) {
        out << hist.labels[static_cast<size_t>(i)] << "," << hist.labels[static_cast<size_t>(i)];
        for (Index c = 0; c < result.coords.cols(); ++c)
            out << strfmt(",%.9g", result.coords(i, c));
        out << "\n";
    }
    return result.stress1;
}

void cmd_tsne(const std::string& vectors_csv, double perplexity, uint64_t seed,
              const std::string& out_embedding) {
    const VectorTable table = load_vectors_csv(vectors_csv);

    if (perplexity <= 0.0) {  // points per class, the analysis default
        std::map<std::string, long> counts;
        for (const std::string& l : table.languages) counts[l] += 1;
        long smallest = std::numeric_limits<long>::max();
        for (const auto& [l, c] : counts) smallest = std::min(smallest, c);
        perplexity = static_cast<double>(smallest);
    }

    // Square-root transform puts Euclidean distances on the Hellinger scale.
    MatrixXd points = table.rows.cwiseMax(0.0).array().sqrt().matrix();
    TsneOptions options;
    options.perplexity = perplexity;
    options.seed = seed;
    const TsneResult result = tsne(points, options);

    std::ofstream out(out_embedding);
    if (!out) throw Error::io("cannot write csv file: " + out_embedding);
    out << "id,language,x,y\n";
    for (Index i = 0; i < result.embedding.rows(); ++i) {
        out << table.ids[static_cast<size_t>(i)] << "," << table.languages[static_cast<size_t>(i)]
            << strfmt(",%.9g,%.9g\n", result.embedding(i, 0), result.embedding(i, 1));
    }
}

void cmd_metrics(const std::vector<std::string>& segmentation_paths, const std::string& out_csv) {
    if (segmentation_paths.empty()) throw Error::invalid("no segmentation files given");
    std::vector<std::pair<IntervalSequence, MetricVector>> rows;
    for (const std::string& path : segmentation_paths) {
        IntervalSequence seq = parse_segmentation(path);
        MetricVector m = compute_metrics(seq);
        rows.emplace_back(std::move(seq), m);
    }
    write_metrics_csv(rows, out_csv);
}

SentenceSet load_sentences(const std::string& manifest_path, const FeatureConfig& config) {
    std::ifstream in(manifest_path);
    if (!in) throw Error::io("cannot open sentence manifest: " + manifest_path);
    SentenceSet set;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw Error::format(strfmt("%s:%d: invalid JSON: %s", manifest_path.c_str(), line_no,
                                       e.what()));
        }
        for (const char* field : {"audio", "segmentation"}) {
            if (!obj.contains(field) || !obj[field].is_string())
                throw Error::validation(strfmt("%s:%d: missing field \"%s\"",
                                               manifest_path.c_str(), line_no, field));
        }
        auto resolve = [&](std::string p) {
            if (!p.empty() && p[0] != '/')
                p = (fs::path(manifest_path).parent_path() / p).string();
            return p;
        };
        SentenceInput input;
        input.segmentation = parse_segmentation(resolve(obj["segmentation"].get<std::string>()));
        if (obj.contains("language")) input.segmentation.language = obj["language"].get<std::string>();
        if (obj.contains("id")) input.segmentation.id = obj["id"].get<std::string>();
        input.features = extract_features_file(resolve(obj["audio"].get<std::string>()), config);
        set.sentences.push_back(std::move(input));
    }
    if (set.sentences.empty()) throw Error::validation(manifest_path + ": empty sentence manifest");
    return set;
}

void cmd_correlate(const std::string& checkpoint, const std::string& sentences_manifest,
                   const CorrelateCmdOptions& options, const std::string& out_dir) {
    const LstmModel model = load_checkpoint(checkpoint);
    const SentenceSet set = load_sentences(sentences_manifest);
    const ActivationTable table = collect_activations(model, set.sentences, options.layer,
                                                      options.seed);
    fs::create_directories(out_dir);

    std::ofstream cells((fs::path(out_dir) / "single_cell.csv").string());
    if (!cells) throw Error::io("cannot write single_cell.csv under " + out_dir);
    cells << "layer,metric,unit,r,p,significant\n";

    std::vector<LinearCorrelate> correlates;
    for (int metric = 0; metric < 7; ++metric) {
        const char* name = MetricVector::kNames[metric];
        std::vector<double> values;
        std::vector<Index> rows;
        for (Index i = 0; i < table.activations.rows(); ++i) {
            const auto v = table.metrics[static_cast<size_t>(i)].by_index(metric);
            if (v) {
                values.push_back(*v);
                rows.push_back(i);
            }
        }
        if (rows.size() < static_cast<size_t>(std::max(3, options.folds))) {
            log_warn(strfmt("metric %s defined for only %zu sentences; skipped", name,
                            rows.size()));
            correlates.emplace_back();
            continue;
        }
        MatrixXd x(static_cast<Index>(rows.size()), table.activations.cols());
        std::vector<std::string> groups;
        for (size_t r = 0; r < rows.size(); ++r) {
            x.row(static_cast<Index>(r)) = table.activations.row(rows[r]);
            groups.push_back(table.languages[static_cast<size_t>(rows[r])]);
        }

        ActivationTable view;
        view.activations = x;
        const long correction = options.pooled_bonferroni
                                    ? 2L * table.activations.cols() * 7L
                                    : table.activations.cols() * 7L;
        const auto unit_correlations =
            single_cell_correlation(view, values, options.significance, correction);
        for (const UnitCorrelation& uc : unit_correlations) {
            cells << strfmt("%d,%s,%d,%.9g,%.9g,%d\n", options.layer, name, uc.unit,
                            uc.r, uc.p, uc.significant ? 1 : 0);
        }

        ElasticNetOptions en;
        en.r1 = options.r1;
        en.folds = options.folds;
        en.seed = options.seed;
        const VectorXd y = Eigen::Map<const VectorXd>(values.data(),
                                                      static_cast<Index>(values.size()));
        LinearCorrelate fit = elastic_net_fit(x, y, en, &groups);
        fit.metric = name;
        fit.layer = options.layer;
        save_correlate_json(fit, (fs::path(out_dir) / (std::string("correlate_") + name + ".json"))
                                     .string());
        correlates.push_back(std::move(fit));
    }

    std::ofstream proj((fs::path(out_dir) / "projections.csv").string());
    if (!proj) throw Error::io("cannot write projections.csv under " + out_dir);
    proj << "id,language";
    for (int metric = 0; metric < 7; ++metric) proj << "," << MetricVector::kNames[metric];
    proj << "\n";
    for (Index i = 0; i < table.activations.rows(); ++i) {
        proj << table.ids[static_cast<size_t>(i)] << "," << table.languages[static_cast<size_t>(i)];
        for (int metric = 0; metric < 7; ++metric) {
            const LinearCorrelate& c = correlates[static_cast<size_t>(metric)];
            if (c.weights.size() == table.activations.cols())
                proj << strfmt(",%.9g", c.predict(table.activations.row(i)));
            else
                proj << ",";
        }
        proj << "\n";
    }
}

int PointsTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

PointsTable load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error::format(path + ": empty file");

    PointsTable table;
    {
        std::istringstream head(line);
        std::string field;
        std::vector<std::string> names;
        while (std::getline(head, field, ',')) names.push_back(field);
        if (names.size() < 3 || names[0] != "id" || names[1] != "language")
            throw Error::format(path + ": expected header id,language,<columns...>");
        table.columns.assign(names.begin() + 2, names.end());
    }

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string field;
        std::vector<std::string> parts;
        while (std::getline(fields, field, ',')) parts.push_back(field);
        if (!line.empty() && line.back() == ',') parts.push_back("");
        if (parts.size() != table.columns.size() + 2)
            throw Error::format(strfmt("%s:%d: expected %zu fields, got %zu", path.c_str(),
                                       line_no, table.columns.size() + 2, parts.size()));
        table.ids.push_back(parts[0]);
        table.languages.push_back(parts[1]);
        std::vector<double> row;
        for (size_t i = 2; i < parts.size(); ++i)
            row.push_back(parts[i].empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : std::stod(parts[i]));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error::format(path + ": no data rows");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[r].size(); ++c)
            table.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return table;
}

void cmd_map_points(const std::string& points_csv, const std::string& x_column,
                    const std::string& y_column, const std::string& corpus_tag,
                    const std::string& out_csv, bool append) {
    const PointsTable table = load_points_csv(points_csv);
    const int xc = table.column_index(x_column);
    const int yc = table.column_index(y_column);
    if (xc < 0 || yc < 0)
        throw Error::invalid(strfmt("columns %s/%s not found in %s", x_column.c_str(),
                                    y_column.c_str(), points_csv.c_str()));

    std::map<std::string, std::vector<std::pair<double, double>>> groups;
    for (Index i = 0; i < table.values.rows(); ++i) {
        const double x = table.values(i, xc), y = table.values(i, yc);
        if (std::isnan(x) || std::isnan(y)) continue;
        groups[table.languages[static_cast<size_t>(i)]].emplace_back(x, y);
    }

    std::vector<LanguagePoint> points;
    for (const auto& [language, values] : groups) {
        const double n = static_cast<double>(values.size());
        LanguagePoint pt;
        pt.language = language;
        pt.count = static_cast<long>(values.size());
        for (const auto& [x, y] : values) {
            pt.x_mean += x;
            pt.y_mean += y;
        }
        pt.x_mean /= n;
        pt.y_mean /= n;
        double vx = 0.0, vy = 0.0;
        for (const auto& [x, y] : values) {
            vx += (x - pt.x_mean) * (x - pt.x_mean);
            vy += (y - pt.y_mean) * (y - pt.y_mean);
        }
        pt.x_se = std::sqrt(vx / n) / std::sqrt(n);
        pt.y_se = std::sqrt(vy / n) / std::sqrt(n);
        points.push_back(std::move(pt));
    }
    save_map_csv(points, corpus_tag, out_csv, append);
}

void cmd_map_segments(const std::string& checkpoint, const std::string& cache_dir,
                      const std::string& correlate_x_json, const std::string& correlate_y_json,
                      int per_language, uint64_t seed, const std::string& corpus_tag,
                      const std::string& out_csv, bool append, const std::string& out_points_csv) {
    const LstmModel model = load_checkpoint(checkpoint);
    const SegmentCache cache = load_segment_cache(cache_dir);
    const LinearCorrelate cx = load_correlate_json(correlate_x_json);
    const LinearCorrelate cy = load_correlate_json(correlate_y_json);
    if (cx.layer != cy.layer)
        log_warn(strfmt("correlates come from different layers (%d vs %d)", cx.layer, cy.layer));

    std::map<int, std::vector<size_t>> by_language;
    for (size_t i = 0; i < cache.segments.size(); ++i)
        by_language[cache.segments[i].language].push_back(i);

    std::vector<size_t> subset;
    for (auto& [lang, idx] : by_language) {
        if (per_language > 0 && static_cast<long>(idx.size()) > per_language) {
            auto rng = make_rng(mix_seed(seed, mix_seed(hash_tag("map"),
                                                        static_cast<uint64_t>(lang))));
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(static_cast<size_t>(per_language));
        }
        subset.insert(subset.end(), idx.begin(), idx.end());
    }
    std::sort(subset.begin(), subset.end());

    MatrixXd activations(static_cast<Index>(subset.size()), model.hidden());
    std::vector<std::string> languages;
    for (size_t k = 0; k < subset.size(); ++k) {
        const SegmentRecord& record = cache.segments[subset[k]];
        auto rng = make_rng(mix_seed(seed, mix_seed(hash_tag("map-fwd"),
                                                    static_cast<uint64_t>(subset[k]))));
        const ForwardResult fwd = forward(model, record.features, ForwardMode::analysis, &rng);
        const MatrixXd& hidden = (cx.layer == 1) ? fwd.hidden1 : fwd.hidden2;
        activations.row(static_cast<Index>(k)) = hidden.row(hidden.rows() - 1);
        languages.push_back(model.labels[static_cast<size_t>(record.language)]);
    }

    const auto points = project_map(cx, cy, activations, languages);
    save_map_csv(points, corpus_tag, out_csv, append);

    if (!out_points_csv.empty()) {
        std::ofstream out(out_points_csv);
        if (!out) throw Error::io("cannot write csv file: " + out_points_csv);
        out << "id,language,x,y\n";
        for (Index i = 0; i < activations.rows(); ++i) {
            out << "seg" << subset[static_cast<size_t>(i)] << ","
                << languages[static_cast<size_t>(i)]
                << strfmt(",%.9g,%.9g\n", cx.predict(activations.row(i)),
                          cy.predict(activations.row(i)));
        }
    }
}

namespace {

QdaSummary evaluate_qda(const QdaModel& model, const PointsTable& table,
                        const std::vector<int>& cols, std::ofstream* predictions) {
    long correct = 0, correct3 = 0;
    for (Index i = 0; i < table.values.rows(); ++i) {
        VectorXd point(static_cast<Index>(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c) point(static_cast<Index>(c)) = table.values(i, cols[c]);
        const int truth = model.class_index(table.languages[static_cast<size_t>(i)]);
        const auto top = qda_top_k(model, point, 3);
        const int predicted = top.empty() ? -1 : top[0];
        if (predicted == truth) ++correct;
        if (std::find(top.begin(), top.end(), truth) != top.end()) ++correct3;
        if (predictions) {
            *predictions << table.ids[static_cast<size_t>(i)] << ","
                         << table.languages[static_cast<size_t>(i)] << ","
                         << model.classes[static_cast<size_t>(predicted)].label << "\n";
        }
    }
    const double n = static_cast<double>(table.values.rows());
    return {correct / n, correct3 / n, -1.0, -1.0};
}

}  // namespace

QdaSummary cmd_qda(const std::string& train_points_csv,
                   const std::vector<std::string>& feature_columns,
                   const std::string& test_points_csv, const std::string& out_model_json,
                   const std::string& out_predictions_csv, bool uniform_priors) {
    const PointsTable train_table = load_points_csv(train_points_csv);
    std::vector<int> cols;
    for (const std::string& name : feature_columns) {
        const int c = train_table.column_index(name);
        if (c < 0) throw Error::invalid("column not found: " + name);
        cols.push_back(c);
    }
    if (cols.empty()) throw Error::invalid("no feature columns selected");

    MatrixXd x(train_table.values.rows(), static_cast<Index>(cols.size()));
    for (size_t c = 0; c < cols.size(); ++c) x.col(static_cast<Index>(c)) = train_table.values.col(cols[c]);
    for (Index i = 0; i < x.size(); ++i)
        if (std::isnan(x.data()[i])) throw Error::validation("qda features contain empty values");

    const QdaModel model = qda_fit(x, train_table.languages, uniform_priors);
    if (!out_model_json.empty()) save_qda_json(model, out_model_json);

    std::ofstream predictions;
    if (!out_predictions_csv.empty()) {
        predictions.open(out_predictions_csv);
        if (!predictions) throw Error::io("cannot write csv file: " + out_predictions_csv);
        predictions << "id,language,predicted\n";
    }

    QdaSummary summary = evaluate_qda(model, train_table, cols,
                                      predictions.is_open() ? &predictions : nullptr);
    if (!test_points_csv.empty()) {
        const PointsTable test_table = load_points_csv(test_points_csv);
        std::vector<int> test_cols;
        for (const std::string& name : feature_columns) {
            const int c = test_table.column_index(name);
            if (c < 0) throw Error::invalid("column not found in test csv: " + name);
            test_cols.push_back(c);
        }
        const QdaSummary test = evaluate_qda(model, test_table, test_cols, nullptr);
        summary.test_accuracy = test.train_accuracy;
        summary.test_top3 = test.train_top3;
    }
    return summary;
}

SynthResult cmd_synth(const std::string& out_dir, const SynthOptions& options) {
    return synthesize_corpus(out_dir, options);
}

}  // namespace rhythmlab
