#include "cubeforest/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "cubeforest/error.hpp"

namespace cubeforest::ingest {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

bool is_positive(std::string_view cell, const std::vector<std::string>& positives) {
    for (const auto& p : positives) {
        if (cell == p) {
            return true;
        }
        const auto a = parse_number(cell);
        const auto b = parse_number(p);
        if (a && b && *a == *b) {
            return true;
        }
    }
    return false;
}

}  // namespace

const std::vector<DatasetSpec>& benchmark_registry() {
    static const std::vector<DatasetSpec> registry = {
        {"mulcross", "mulcross.csv", 262144, 4, 0.10},
        {"cover", "cover.csv", 286048, 10, 0.009},
        {"breastw", "breastw.csv", 683, 9, 0.35},
        {"http", "http.csv", 567497, 3, 0.0039},
        {"satellite", "satellite.csv", 6435, 36, 0.32},
        {"shuttle", "shuttle.csv", 49097, 9, 0.0715},
    };
    return registry;
}

const DatasetSpec* find_benchmark(std::string_view name) {
    for (const auto& d : benchmark_registry()) {
        if (d.name == name) {
            return &d;
        }
    }
    return nullptr;
}

std::size_t LabeledDataset::anomaly_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options, const DatasetSpec* expected,
                        const WarningSink& warn) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    LabeledDataset data;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> label_index;
    std::size_t width = 0;
    bool first = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, options.delimiter);
        if (first) {
            width = cells.size();
            if (options.label_column) {
                const int c = *options.label_column;
                const int idx = c < 0 ? static_cast<int>(width) + c : c;
                if (idx < 0 || idx >= static_cast<int>(width)) {
                    throw DataError(path.string() + ": label column " + std::to_string(c) + " out of range");
                }
                label_index = static_cast<std::size_t>(idx);
            }
            bool header = false;
            if (options.header) {
                header = *options.header;
            } else {
                for (std::size_t j = 0; j < cells.size(); ++j) {
                    if (j != label_index && !parse_number(cells[j])) {
                        header = true;
                    }
                }
            }
            first = false;
            if (header) {
                for (std::size_t j = 0; j < cells.size(); ++j) {
                    if (j != label_index) {
                        data.columns.emplace_back(cells[j]);
                    }
                }
                continue;
            }
        }
        if (cells.size() != width) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
        }
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j == label_index) {
                data.labels.push_back(is_positive(cells[j], options.positive_labels));
                continue;
            }
            const auto v = parse_number(cells[j]);
            if (!v) {
                throw DataError(path.string() + ": non-numeric value '" + std::string(cells[j]) + "' at row " +
                                std::to_string(line_no) + ", column " + std::to_string(j + 1));
            }
            row.push_back(*v);
        }
        data.features.push_row(row);
    }
    if (data.features.empty()) {
        throw DataError(path.string() + ": no rows");
    }
    if (expected && warn) {
        if (data.features.rows() != expected->rows || data.features.cols() != expected->attributes) {
            warn(expected->name + ": registry lists " + std::to_string(expected->rows) + " rows x " +
                 std::to_string(expected->attributes) + " attributes, file has " +
                 std::to_string(data.features.rows()) + " x " + std::to_string(data.features.cols()));
        }
    }
    return data;
}

void write_csv(std::ostream& out, const LabeledDataset& data) {
    const std::size_t d = data.features.cols();
    for (std::size_t j = 0; j < d; ++j) {
        out << (j < data.columns.size() ? data.columns[j] : "f" + std::to_string(j)) << ',';
    }
    out << "label\n" << std::setprecision(17);
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
        for (double v : data.features.row(i)) {
            out << v << ',';
        }
        out << (!data.labels.empty() && data.labels[i] ? 1 : 0) << '\n';
    }
}

LabeledDataset load_benchmark(const DatasetSpec& spec, const std::filesystem::path& dir, const WarningSink& warn) {
    return load_csv(dir / spec.file, CsvOptions{}, &spec, warn);
}

StreamSource::StreamSource(std::istream& in, StreamOptions options, WarningSink warn)
    : in_(in), options_(options), warn_(std::move(warn)) {}

std::optional<stream::LabeledPoint> StreamSource::parse(const std::string& line, std::string& error) const {
    const auto cells = split(line, options_.delimiter);
    if (cells.size() == 1 && cells.front().empty()) {
        error = "blank line";
        return std::nullopt;
    }
    const std::size_t n_features = options_.trailing_label ? cells.size() - 1 : cells.size();
    if (n_features == 0) {
        error = "no feature values";
        return std::nullopt;
    }
    if (dimension_ && n_features != *dimension_) {
        error = std::to_string(n_features) + " features, expected " + std::to_string(*dimension_);
        return std::nullopt;
    }
    stream::LabeledPoint p;
    p.features.reserve(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
        const auto v = parse_number(cells[j]);
        if (!v) {
            error = "non-numeric value '" + std::string(cells[j]) + "' in column " + std::to_string(j + 1);
            return std::nullopt;
        }
        p.features.push_back(*v);
    }
    if (options_.trailing_label) {
        const auto v = parse_number(cells.back());
        if (!v || (*v != 0.0 && *v != 1.0)) {
            error = "label must be 0 or 1";
            return std::nullopt;
        }
        p.label = *v == 1.0;
    }
    return p;
}

std::optional<stream::LabeledPoint> StreamSource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line_no_ == 1 && options_.header) {
            continue;
        }
        std::string error;
        auto p = parse(line, error);
        if (p) {
            if (!dimension_) {
                dimension_ = p->features.size();
            }
            return p;
        }
        if (options_.malformed == MalformedPolicy::Abort) {
            throw DataError("line " + std::to_string(line_no_) + ": " + error);
        }
        ++skipped_;
        if (warn_) {
            warn_("skipping line " + std::to_string(line_no_) + ": " + error);
        }
    }
    return std::nullopt;
}

MinMaxScaler MinMaxScaler::fit(const Matrix& window) {
    if (window.empty()) {
        throw std::invalid_argument("cannot fit a scaler on an empty window");
    }
    MinMaxScaler s;
    auto first = window.row(0);
    s.lo_.assign(first.begin(), first.end());
    s.hi_ = s.lo_;
    for (std::size_t i = 1; i < window.rows(); ++i) {
        auto r = window.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            s.lo_[j] = std::min(s.lo_[j], r[j]);
            s.hi_[j] = std::max(s.hi_[j], r[j]);
        }
    }
    return s;
}

void MinMaxScaler::transform(std::span<double> point) const {
    if (point.size() != lo_.size()) {
        throw std::invalid_argument("point dimension does not match scaler");
    }
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double range = hi_[j] - lo_[j];
        // constant features map to 0; future values keep their offset
        point[j] = range > 0.0 ? (point[j] - lo_[j]) / range : point[j] - lo_[j];
    }
}

Matrix MinMaxScaler::transform(const Matrix& rows) const {
    Matrix out = rows;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        transform(out.row(i));
    }
    return out;
}

ScalingSource::ScalingSource(stream::PointSource& inner, std::size_t window) : inner_(inner), window_(window) {
    if (window == 0) {
        throw std::invalid_argument("scaling window must be positive");
    }
}

std::optional<stream::LabeledPoint> ScalingSource::next() {
    if (!scaler_) {
        Matrix fit_rows;
        while (pending_.size() < window_) {
            auto p = inner_.next();
            if (!p) {
                break;
            }
            fit_rows.push_row(p->features);
            pending_.push_back(std::move(*p));
        }
        if (pending_.empty()) {
            return std::nullopt;
        }
        scaler_ = MinMaxScaler::fit(fit_rows);
    }
    if (pending_pos_ < pending_.size()) {
        auto p = std::move(pending_[pending_pos_++]);
        if (pending_pos_ == pending_.size()) {
            pending_.clear();
            pending_.shrink_to_fit();
            pending_pos_ = 0;
        }
        scaler_->transform(p.features);
        return p;
    }
    auto p = inner_.next();
    if (p) {
        scaler_->transform(p->features);
    }
    return p;
}

}  // namespace cubeforest::ingest
