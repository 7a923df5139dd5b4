#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rhythmlab {

enum class IntervalKind { consonantal, vocalic };

struct Interval {
    IntervalKind kind;
    double duration;  // seconds
};

struct IntervalSequence {
    std::vector<Interval> intervals;
    std::string id;
    std::string language;
};

// Duration statistics over consonantal/vocalic intervals. Deltas and rPVI are
// in ms, Varcos and nPVI are scaled by 100. A field is empty when the sequence
// has too few intervals of the required kind.
struct MetricVector {
    std::optional<double> percent_v;
    std::optional<double> delta_c;
    std::optional<double> delta_v;
    std::optional<double> varco_c;
    std::optional<double> varco_v;
    std::optional<double> rpvi_c;
    std::optional<double> npvi_v;

    static const char* const kNames[7];  // csv column order
    std::optional<double> by_index(int i) const;
    std::optional<double> by_name(const std::string& name) const;
};

// Text format: one interval per line, "C 0.083" or "V 0.125" (duration in
// seconds). '#' starts a comment; "# language: X" and "# id: X" set metadata.
// Adjacent intervals of the same kind are merged with a warning.
IntervalSequence parse_segmentation(const std::string& path);
IntervalSequence parse_segmentation_text(const std::string& text, const std::string& origin);

MetricVector compute_metrics(const IntervalSequence& seq);

void write_metrics_csv(const std::vector<std::pair<IntervalSequence, MetricVector>>& rows,
                       const std::string& path);

}  // namespace rhythmlab
