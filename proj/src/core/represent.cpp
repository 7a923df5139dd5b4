#include "core/represent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_distribution(const VectorXd& p, const char* which) {
    if ((p.array() < 0.0).any())
        throw Error::invalid(strfmt("distance input %s has negative entries", which));
    if (std::abs(p.sum() - 1.0) > 1e-6)
        throw Error::invalid(strfmt("distance input %s sums to %.9f, expected 1", which, p.sum()));
}

}  // namespace

double hellinger(const VectorXd& p, const VectorXd& q) {
    if (p.size() != q.size()) throw Error::invalid("distance inputs differ in length");
    check_distribution(p, "p");
    check_distribution(q, "q");
    return (p.array().sqrt() - q.array().sqrt()).matrix().norm();
}

double bhattacharyya(const VectorXd& p, const VectorXd& q, bool* clamped) {
    if (p.size() != q.size()) throw Error::invalid("distance inputs differ in length");
    check_distribution(p, "p");
    check_distribution(q, "q");
    const double coefficient = (p.array() * q.array()).sqrt().sum();
    if (clamped) *clamped = coefficient < 1e-12;
    return -std::log(std::max(coefficient, 1e-12));
}

Measure measure_from_name(const std::string& name) {
    if (name == "hellinger") return Measure::hellinger;
    if (name == "bhattacharyya") return Measure::bhattacharyya;
    throw Error::invalid("unknown measure \"" + name + "\" (hellinger|bhattacharyya)");
}

LanguageHistograms collect_histograms(const LstmModel& model,
                                      const std::vector<SegmentRecord>& segments,
                                      const std::vector<size_t>& subset, uint64_t seed,
                                      int repeats) {
    if (repeats < 1) throw Error::invalid("repeats must be at least 1");
    const int n_labels = model.num_labels();
    std::map<int, long> counts;
    for (size_t i : subset) counts[segments[i].language] += 1;
    if (counts.empty()) throw Error::validation("empty histogram subset");
    const long per_language = counts.begin()->second;
    for (const auto& [lang, n] : counts) {
        if (n != per_language)
            throw Error::validation(strfmt(
                "histogram subset is unbalanced: language %d has %ld recordings, expected %ld",
                lang, n, per_language));
    }

    const Index n = static_cast<Index>(subset.size());
    LanguageHistograms out;
    out.labels = model.labels;
    out.vectors.setZero(n, n_labels);
    out.recording_language.resize(static_cast<size_t>(n));

    for (Index r = 0; r < n; ++r) {
        const SegmentRecord& record = segments[subset[static_cast<size_t>(r)]];
        out.recording_language[static_cast<size_t>(r)] = record.language;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n_labels);
        for (int rep = 0; rep < repeats; ++rep) {
            auto rng = make_rng(mix_seed(seed, mix_seed(static_cast<uint64_t>(r),
                                                        static_cast<uint64_t>(rep))));
            const ForwardResult fwd = forward(model, record.features, ForwardMode::analysis, &rng);
            acc += fwd.probs.row(fwd.probs.rows() - 1);
        }
        out.vectors.row(r) = acc / repeats;
    }

    // [omega_i]_n = [z_n]_i / sum_k [z_k]_i
    out.omega.resize(n_labels, n);
    for (int i = 0; i < n_labels; ++i) {
        const double total = out.vectors.col(i).sum();
        if (total <= 0.0)
            throw Error::numeric(strfmt("language %d received zero total output mass", i));
        out.omega.row(i) = out.vectors.col(i).transpose() / total;
    }
    return out;
}

DissimilarityMatrix histogram_distances(const LanguageHistograms& hist, Measure measure) {
    const Index n = hist.omega.rows();
    DissimilarityMatrix m;
    m.labels = hist.labels;
    m.measure = measure;
    m.d.setZero(n, n);
    int clamped_pairs = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            bool clamped = false;
            const double value = measure == Measure::hellinger
                                     ? hellinger(hist.omega.row(i), hist.omega.row(j))
                                     : bhattacharyya(hist.omega.row(i), hist.omega.row(j), &clamped);
            if (clamped) ++clamped_pairs;
            m.d(i, j) = m.d(j, i) = value;
        }
    }
    if (clamped_pairs > 0)
        log_warn(strfmt("%d language pair(s) have disjoint support; distance clamped", clamped_pairs));
    return m;
}

void save_dissimilarity_csv(const DissimilarityMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write csv file: " + path);
    out << "language";
    for (const std::string& l : m.labels) out << "," << l;
    out << "\n";
    char buf[64];
    for (Index i = 0; i < m.d.rows(); ++i) {
        out << m.labels[static_cast<size_t>(i)];
        for (Index j = 0; j < m.d.cols(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.12g", m.d(i, j));
            out << buf;
        }
        out << "\n";
    }
}

void save_histograms_csv(const LanguageHistograms& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write csv file: " + path);
    out << "language";
    for (Index c = 0; c < hist.omega.cols(); ++c) out << ",r" << c;
    out << "\n";
    char buf[64];
    for (Index i = 0; i < hist.omega.rows(); ++i) {
        out << hist.labels[static_cast<size_t>(i)];
        for (Index c = 0; c < hist.omega.cols(); ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", hist.omega(i, c));
            out << buf;
        }
        out << "\n";
    }
}

void save_vectors_csv(const LanguageHistograms& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write csv file: " + path);
    out << "id,language";
    for (size_t i = 0; i < hist.labels.size(); ++i) out << ",p_" << hist.labels[i];
    out << "\n";
    char buf[64];
    for (Index r = 0; r < hist.vectors.rows(); ++r) {
        out << "rec" << r << ","
            << hist.labels[static_cast<size_t>(hist.recording_language[static_cast<size_t>(r)])];
        for (Index c = 0; c < hist.vectors.cols(); ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", hist.vectors(r, c));
            out << buf;
        }
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace

LanguageHistograms load_histograms_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error::format(path + ": empty file");
    LanguageHistograms hist;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 2) throw Error::format(path + ": malformed row");
        hist.labels.push_back(fields[0]);
        std::vector<double> row;
        for (size_t i = 1; i < fields.size(); ++i) row.push_back(std::stod(fields[i]));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error::format(path + ": no histogram rows");
    hist.omega.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw Error::format(path + ": ragged rows");
        for (size_t c = 0; c < rows[r].size(); ++c)
            hist.omega(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return hist;
}

VectorTable load_vectors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open csv file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error::format(path + ": empty file");
    VectorTable table;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 3) throw Error::format(path + ": malformed row");
        table.ids.push_back(fields[0]);
        table.languages.push_back(fields[1]);
        std::vector<double> row;
        for (size_t i = 2; i < fields.size(); ++i) row.push_back(std::stod(fields[i]));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error::format(path + ": no vector rows");
    table.rows.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw Error::format(path + ": ragged rows");
        for (size_t c = 0; c < rows[r].size(); ++c)
            table.rows(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return table;
}

}  // namespace rhythmlab
