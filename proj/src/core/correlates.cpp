#include "core/correlates.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "core/common.hpp"
#include "core/stats.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

ActivationTable collect_activations(const LstmModel& model,
                                    const std::vector<SentenceInput>& sentences, int layer,
                                    uint64_t seed) {
    if (layer != 1 && layer != 2) throw Error::invalid("layer must be 1 or 2");
    if (sentences.empty()) throw Error::validation("no sentences to analyze");

    ActivationTable table;
    table.layer = layer;
    table.activations.resize(static_cast<Index>(sentences.size()), model.hidden());
    for (size_t i = 0; i < sentences.size(); ++i) {
        const SentenceInput& s = sentences[i];
        auto rng = make_rng(mix_seed(seed, mix_seed(hash_tag("activations"),
                                                    static_cast<uint64_t>(i))));
        const ForwardResult fwd = forward(model, s.features, ForwardMode::analysis, &rng);
        const MatrixXd& hidden = (layer == 1) ? fwd.hidden1 : fwd.hidden2;
        table.activations.row(static_cast<Index>(i)) = hidden.row(hidden.rows() - 1);
        table.ids.push_back(s.segmentation.id);
        table.languages.push_back(s.segmentation.language);
        table.metrics.push_back(compute_metrics(s.segmentation));
    }
    return table;
}

std::vector<UnitCorrelation> single_cell_correlation(const ActivationTable& table,
                                                     const std::vector<double>& metric_values,
                                                     double significance,
                                                     long correction_count) {
    const Index n = table.activations.rows();
    if (static_cast<Index>(metric_values.size()) != n)
        throw Error::invalid("one metric value per sentence required");
    if (n < 3) throw Error::validation("need at least 3 sentences");

    const VectorXd y = Eigen::Map<const VectorXd>(metric_values.data(), n);
    std::vector<UnitCorrelation> results;
    long defined = 0;
    for (Index u = 0; u < table.activations.cols(); ++u) {
        UnitCorrelation uc;
        uc.unit = static_cast<int>(u);
        const CorrelationResult cr = correlation_test(table.activations.col(u), y);
        uc.r = cr.r;
        uc.p = cr.p;
        uc.defined = cr.defined;
        if (uc.defined) ++defined;
        results.push_back(uc);
    }
    // Undefined (zero-variance) units are excluded from the correction count.
    const long tests = correction_count > 0 ? correction_count
                                            : defined * static_cast<long>(7);
    const double threshold = significance / static_cast<double>(std::max<long>(tests, 1));
    for (UnitCorrelation& uc : results)
        uc.significant = uc.defined && uc.p < threshold;
    return results;
}

std::vector<LanguagePoint> project_map(const LinearCorrelate& correlate_x,
                                       const LinearCorrelate& correlate_y,
                                       const MatrixXd& activations,
                                       const std::vector<std::string>& languages) {
    if (static_cast<Index>(languages.size()) != activations.rows())
        throw Error::invalid("one language per activation row required");
    if (activations.rows() == 0) throw Error::validation("empty activation table");

    std::map<std::string, std::vector<Index>> groups;
    for (Index i = 0; i < activations.rows(); ++i)
        groups[languages[static_cast<size_t>(i)]].push_back(i);

    std::vector<LanguagePoint> points;
    for (const auto& [language, rows] : groups) {
        const double n = static_cast<double>(rows.size());
        LanguagePoint pt;
        pt.language = language;
        pt.count = static_cast<long>(rows.size());
        std::vector<double> xs, ys;
        for (Index i : rows) {
            xs.push_back(correlate_x.predict(activations.row(i)));
            ys.push_back(correlate_y.predict(activations.row(i)));
        }
        auto mean_of = [&](const std::vector<double>& v) {
            double acc = 0.0;
            for (double x : v) acc += x;
            return acc / n;
        };
        auto se_of = [&](const std::vector<double>& v, double mean) {
            double acc = 0.0;
            for (double x : v) acc += (x - mean) * (x - mean);
            return std::sqrt(acc / n) / std::sqrt(n);
        };
        pt.x_mean = mean_of(xs);
        pt.y_mean = mean_of(ys);
        pt.x_se = se_of(xs, pt.x_mean);
        pt.y_se = se_of(ys, pt.y_mean);
        points.push_back(std::move(pt));
    }
    return points;
}

void save_map_csv(const std::vector<LanguagePoint>& points, const std::string& corpus_tag,
                  const std::string& path, bool append) {
    const bool write_header = !append || !std::ifstream(path).good();
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw Error::io("cannot write csv file: " + path);
    if (write_header) out << "language,x_mean,x_se,y_mean,y_se,corpus\n";
    char buf[160];
    for (const LanguagePoint& pt : points) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g,%s\n", pt.language.c_str(),
                      pt.x_mean, pt.x_se, pt.y_mean, pt.y_se, corpus_tag.c_str());
        out << buf;
    }
}

}  // namespace rhythmlab
