#include "cubeforest/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cubeforest::eval {

std::string_view to_string(AnomalyType t) noexcept {
    switch (t) {
        case AnomalyType::None:
            return "none";
        case AnomalyType::Point:
            return "point";
        case AnomalyType::Contextual:
            return "contextual";
        case AnomalyType::Collective:
            return "collective";
    }
    return "none";
}

AnomalyType parse_anomaly_type(std::string_view tag) {
    for (auto t : {AnomalyType::None, AnomalyType::Point, AnomalyType::Contextual, AnomalyType::Collective}) {
        if (tag == to_string(t)) {
            return t;
        }
    }
    throw std::invalid_argument("unknown anomaly type '" + std::string(tag) + "'");
}

double auc_roc(const LabeledScores& data) {
    const std::size_t n = data.scores.size();
    if (data.labels.size() != n) {
        throw std::invalid_argument("scores and labels differ in length");
    }
    const auto n_a = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), true));
    const std::size_t n_n = n - n_a;
    if (n_a == 0 || n_n == 0) {
        throw std::invalid_argument("AUC undefined: need at least one anomaly and one normal point");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

    // ascending 1-based ranks, tied blocks share their mid-rank
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && data.scores[order[j + 1]] == data.scores[order[i]]) {
            ++j;
        }
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (data.labels[order[k]]) {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    const double na = static_cast<double>(n_a);
    return (rank_sum - (na * na + na) / 2.0) / (na * static_cast<double>(n_n));
}

std::size_t contamination_count(std::size_t n, double contamination) {
    if (!(contamination > 0.0 && contamination < 1.0)) {
        throw std::invalid_argument("contamination must lie in (0,1)");
    }
    // the small offset keeps exact products such as 0.1 * 10 from rounding up
    const double k = std::ceil(contamination * static_cast<double>(n) - 1e-9);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

std::vector<bool> threshold_labels(std::span<const double> scores, double contamination) {
    const std::size_t k = contamination_count(scores.size(), contamination);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<bool> out(scores.size(), false);
    for (std::size_t i = 0; i < k; ++i) {
        out[order[i]] = true;
    }
    return out;
}

std::map<AnomalyType, double> per_type_accuracy(const LabeledScores& data, const std::vector<bool>& predictions) {
    if (data.types.size() != predictions.size()) {
        throw std::invalid_argument("type tags and predictions differ in length");
    }
    std::map<AnomalyType, std::pair<std::size_t, std::size_t>> tally;  // correct, total
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const AnomalyType t = data.types[i];
        const bool correct = (t == AnomalyType::None) ? !predictions[i] : predictions[i];
        auto& [hit, total] = tally[t];
        hit += correct ? 1 : 0;
        ++total;
    }
    std::map<AnomalyType, double> out;
    for (const auto& [t, counts] : tally) {
        out[t] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return out;
}

MetricsRecord& MetricsRecord::add(std::string key, std::string value) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
        throw std::invalid_argument("metrics keys/values must be single-line and keys must not contain '='");
    }
    entries_.emplace_back(std::move(key), std::move(value));
    return *this;
}

MetricsRecord& MetricsRecord::add(std::string key, double value) {
    std::ostringstream os;
    os << std::setprecision(17) << value;
    return add(std::move(key), os.str());
}

MetricsRecord& MetricsRecord::add(std::string key, long long value) {
    return add(std::move(key), std::to_string(value));
}

const std::string* MetricsRecord::find(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

void write_metrics(std::ostream& out, const std::vector<MetricsRecord>& records) {
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        for (const auto& [k, v] : r.entries()) {
            out << k << '=' << v << '\n';
        }
        out << '\n';
    }
}

std::vector<MetricsRecord> read_metrics(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw std::runtime_error("not a cubeforest metrics file");
    }
    std::vector<MetricsRecord> records;
    MetricsRecord current;
    bool open = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            if (open) {
                records.push_back(std::move(current));
                current = MetricsRecord{};
                open = false;
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("malformed metrics line: " + line);
        }
        current.add(line.substr(0, eq), line.substr(eq + 1));
        open = true;
    }
    if (open) {
        records.push_back(std::move(current));
    }
    return records;
}

}  // namespace cubeforest::eval
