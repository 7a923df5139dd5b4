#include "core/rhythm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace rhythmlab {

const char* const MetricVector::kNames[7] = {
    "percent_v", "delta_c", "delta_v", "varco_c", "varco_v", "rpvi_c", "npvi_v"};

std::optional<double> MetricVector::by_index(int i) const {
    switch (i) {
        case 0: return percent_v;
        case 1: return delta_c;
        case 2: return delta_v;
        case 3: return varco_c;
        case 4: return varco_v;
        case 5: return rpvi_c;
        case 6: return npvi_v;
        default: return std::nullopt;
    }
}

std::optional<double> MetricVector::by_name(const std::string& name) const {
    for (int i = 0; i < 7; ++i)
        if (name == kNames[i]) return by_index(i);
    return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void parse_metadata_comment(const std::string& comment, IntervalSequence& seq) {
    const std::string body = trim(comment);
    if (body.rfind("language:", 0) == 0) seq.language = trim(body.substr(9));
    else if (body.rfind("id:", 0) == 0) seq.id = trim(body.substr(3));
}

}  // namespace

IntervalSequence parse_segmentation_text(const std::string& text, const std::string& origin) {
    IntervalSequence seq;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    int merges = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) {
            parse_metadata_comment(line.substr(hash + 1), seq);
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        std::istringstream fields(line);
        std::string kind_tag;
        double duration = 0.0;
        if (!(fields >> kind_tag >> duration)) {
            throw Error::format(strfmt("%s:%d: expected \"C|V <seconds>\", got \"%s\"",
                                       origin.c_str(), line_no, line.c_str()));
        }
        IntervalKind kind;
        if (kind_tag == "C" || kind_tag == "c") kind = IntervalKind::consonantal;
        else if (kind_tag == "V" || kind_tag == "v") kind = IntervalKind::vocalic;
        else
            throw Error::format(strfmt("%s:%d: unknown interval kind \"%s\"",
                                       origin.c_str(), line_no, kind_tag.c_str()));
        if (!(duration > 0.0) || !std::isfinite(duration)) {
            throw Error::format(strfmt("%s:%d: duration must be positive, got %g",
                                       origin.c_str(), line_no, duration));
        }
        if (!seq.intervals.empty() && seq.intervals.back().kind == kind) {
            seq.intervals.back().duration += duration;
            ++merges;
        } else {
            seq.intervals.push_back({kind, duration});
        }
    }
    if (seq.intervals.empty()) throw Error::format(origin + ": no intervals found");
    if (merges > 0)
        log_warn(strfmt("%s: merged %d adjacent same-kind interval(s)", origin.c_str(), merges));
    if (seq.id.empty()) seq.id = origin;
    return seq;
}

IntervalSequence parse_segmentation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error::io("cannot open segmentation file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string stem = path;
    const size_t slash = stem.find_last_of('/');
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    const size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
    IntervalSequence seq = parse_segmentation_text(buf.str(), path);
    if (seq.id == path) seq.id = stem;
    return seq;
}

MetricVector compute_metrics(const IntervalSequence& seq) {
    std::vector<double> c, v;
    for (const Interval& iv : seq.intervals)
        (iv.kind == IntervalKind::consonantal ? c : v).push_back(iv.duration);

    auto sum = [](const std::vector<double>& d) {
        double s = 0.0;
        for (double x : d) s += x;
        return s;
    };
    auto pop_sd = [&](const std::vector<double>& d) {
        const double mean = sum(d) / d.size();
        double acc = 0.0;
        for (double x : d) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / d.size());
    };
    auto rpvi = [](const std::vector<double>& d) {
        double acc = 0.0;
        for (size_t k = 0; k + 1 < d.size(); ++k) acc += std::abs(d[k + 1] - d[k]);
        return acc / (d.size() - 1);
    };
    auto npvi = [](const std::vector<double>& d) {
        double acc = 0.0;
        for (size_t k = 0; k + 1 < d.size(); ++k)
            acc += std::abs((d[k + 1] - d[k]) / ((d[k + 1] + d[k]) / 2.0));
        return acc / (d.size() - 1);
    };

    MetricVector m;
    const double sum_c = sum(c), sum_v = sum(v);
    if (!c.empty() && !v.empty()) m.percent_v = 100.0 * sum_v / (sum_v + sum_c);
    if (c.size() >= 2) {
        const double sd_ms = pop_sd(c) * 1000.0;
        m.delta_c = sd_ms;
        m.varco_c = 100.0 * sd_ms / (sum_c / c.size() * 1000.0);
        m.rpvi_c = rpvi(c) * 1000.0;
    }
    if (v.size() >= 2) {
        const double sd_ms = pop_sd(v) * 1000.0;
        m.delta_v = sd_ms;
        m.varco_v = 100.0 * sd_ms / (sum_v / v.size() * 1000.0);
        m.npvi_v = 100.0 * npvi(v);
    }
    return m;
}

void write_metrics_csv(const std::vector<std::pair<IntervalSequence, MetricVector>>& rows,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write csv file: " + path);
    out << "id,language";
    for (const char* name : MetricVector::kNames) out << "," << name;
    out << "\n";
    char buf[64];
    for (const auto& [seq, m] : rows) {
        out << seq.id << "," << seq.language;
        for (int i = 0; i < 7; ++i) {
            const auto value = m.by_index(i);
            if (value) {
                std::snprintf(buf, sizeof buf, ",%.12g", *value);
                out << buf;
            } else {
                out << ",";
            }
        }
        out << "\n";
    }
    if (!out) throw Error::io("short write: " + path);
}

}  // namespace rhythmlab
