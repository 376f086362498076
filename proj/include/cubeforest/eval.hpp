#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cubeforest::eval {

enum class AnomalyType { None, Point, Contextual, Collective };

std::string_view to_string(AnomalyType t) noexcept;
// Throws std::invalid_argument on an unknown tag.
AnomalyType parse_anomaly_type(std::string_view tag);

struct LabeledScores {
    std::vector<double> scores;
    std::vector<bool> labels;  // true = anomaly
    std::vector<AnomalyType> types;  // optional; empty or one per point
};

// Rank-sum AUC: (sum of ascending mid-ranks of anomalies - (n_a^2 + n_a)/2) / (n_a * n_n).
double auc_roc(const LabeledScores& data);

// Flags the ceil(q * N) highest scores; ties at the cutoff go to the earlier index.
std::vector<bool> threshold_labels(std::span<const double> scores, double contamination);

// Number of points threshold_labels flags for N points.
std::size_t contamination_count(std::size_t n, double contamination);

// Fraction of each present type classified correctly: anomaly types must be
// flagged, AnomalyType::None must not be.
std::map<AnomalyType, double> per_type_accuracy(const LabeledScores& data, const std::vector<bool>& predictions);

// One record of the metrics report: ordered key/value pairs.
class MetricsRecord {
public:
    MetricsRecord& add(std::string key, std::string value);
    MetricsRecord& add(std::string key, double value);
    MetricsRecord& add(std::string key, long long value);
    MetricsRecord& add(std::string key, std::size_t value) {
        return add(std::move(key), static_cast<long long>(value));
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    const std::string* find(std::string_view key) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

inline constexpr std::string_view kMetricsHeader = "# cubeforest-metrics v1";

// Header line, then each record as key=value lines terminated by a blank line.
void write_metrics(std::ostream& out, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics(std::istream& in);

}  // namespace cubeforest::eval
