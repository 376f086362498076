#include "cubeforest/stream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cubeforest/error.hpp"
#include "cubeforest/eval.hpp"

namespace cubeforest::stream {
namespace {

using Clock = std::chrono::steady_clock;

// Offset separating sampling streams from tree streams under one master seed.
constexpr std::uint64_t kSamplingStream = 0x8000000000000000ULL;

std::chrono::microseconds since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
}

}  // namespace

MatrixSource::MatrixSource(const Matrix& rows, std::vector<bool> labels)
    : rows_(rows), labels_(std::move(labels)) {
    if (!labels_.empty() && labels_.size() != rows_.rows()) {
        throw std::invalid_argument("label count does not match row count");
    }
}

std::optional<LabeledPoint> MatrixSource::next() {
    if (pos_ >= rows_.rows()) {
        return std::nullopt;
    }
    auto r = rows_.row(pos_);
    LabeledPoint p{FeatureVector(r.begin(), r.end()), std::nullopt};
    if (!labels_.empty()) {
        p.label = labels_[pos_];
    }
    ++pos_;
    return p;
}

void DetectorConfig::validate() const {
    if (window_size < 2) {
        throw std::invalid_argument("window size must be at least 2");
    }
    if (ntrees < 1) {
        throw std::invalid_argument("ntrees must be at least 1");
    }
    if (ktrees < 1 || ktrees > ntrees) {
        throw std::invalid_argument("ktrees must lie in [1, ntrees]");
    }
    if (sample_size < 1 || sample_size > window_size) {
        throw std::invalid_argument("sample size must lie in [1, window size]");
    }
    if (threshold.kind == ThresholdPolicy::Kind::Contamination &&
        !(threshold.value > 0.0 && threshold.value < 1.0)) {
        throw std::invalid_argument("contamination must lie in (0,1)");
    }
    if (threshold.kind == ThresholdPolicy::Kind::FixedCutoff && !std::isfinite(threshold.value)) {
        throw std::invalid_argument("score cutoff must be finite");
    }
}

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("window capacity must be positive");
    }
}

void SlidingWindow::push(FeatureVector point) {
    if (buffer_.size() == capacity_) {
        buffer_.pop_front();
    }
    buffer_.push_back(std::move(point));
}

Matrix SlidingWindow::to_matrix() const {
    Matrix m;
    for (const auto& p : buffer_) {
        m.push_row(p);
    }
    return m;
}

Thresholded apply_threshold(std::span<const double> scores, const ThresholdPolicy& policy) {
    Thresholded out;
    if (policy.kind == ThresholdPolicy::Kind::FixedCutoff) {
        out.cutoff = policy.value;
        out.labels.resize(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            out.labels[i] = scores[i] >= policy.value;
        }
        return out;
    }
    out.labels = eval::threshold_labels(scores, policy.value);
    out.cutoff = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (out.labels[i]) {
            out.cutoff = std::min(out.cutoff, scores[i]);
        }
    }
    return out;
}

std::vector<std::size_t> count_tree_flags(const iforest::Forest& forest, const Matrix& chunk, double cutoff) {
    std::vector<std::size_t> flags(forest.size(), 0);
    for (std::size_t t = 0; t < forest.size(); ++t) {
        for (std::size_t i = 0; i < chunk.rows(); ++i) {
            const double h = iforest::path_length(forest[t].tree, chunk.row(i));
            if (iforest::score_from_path_length(h, forest.training_size()) >= cutoff) {
                ++flags[t];
            }
        }
    }
    return flags;
}

std::vector<std::size_t> assign_ranks(iforest::Forest& forest, std::span<const std::size_t> flags) {
    if (flags.size() != forest.size()) {
        throw std::invalid_argument("one flag count per tree required");
    }
    std::vector<std::size_t> order(forest.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (flags[a] != flags[b]) {
            return flags[a] > flags[b];
        }
        return forest[a].serial < forest[b].serial;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
        auto& slot = forest[order[r]];
        slot.rank = r;
        slot.anomalies_flagged = flags[order[r]];
    }
    return order;
}

std::vector<std::size_t> rank_trees(iforest::Forest& forest, const Matrix& chunk, double cutoff) {
    const auto flags = count_tree_flags(forest, chunk, cutoff);
    return assign_ranks(forest, flags);
}

std::vector<FeatureVector> shingle(std::span<const double> series, std::size_t width) {
    if (width == 0) {
        throw std::invalid_argument("shingle width must be at least 1");
    }
    std::vector<FeatureVector> out;
    if (series.size() < width) {
        return out;
    }
    out.reserve(series.size() - width + 1);
    for (std::size_t t = 0; t + width <= series.size(); ++t) {
        out.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(t),
                         series.begin() + static_cast<std::ptrdiff_t>(t + width));
    }
    return out;
}

ShingleSource::ShingleSource(PointSource& scalars, std::size_t width) : inner_(scalars), width_(width) {
    if (width == 0) {
        throw std::invalid_argument("shingle width must be at least 1");
    }
}

std::optional<LabeledPoint> ShingleSource::next() {
    while (values_.size() < width_) {
        auto p = inner_.next();
        if (!p) {
            return std::nullopt;
        }
        if (p->features.size() != 1) {
            throw std::invalid_argument("shingling needs a univariate stream");
        }
        values_.push_back(p->features.front());
        labels_.push_back(p->label);
    }
    LabeledPoint out{FeatureVector(values_.begin(), values_.end()), std::nullopt};
    for (const auto& l : labels_) {
        if (l) {
            out.label = out.label.value_or(false) || *l;
        }
    }
    values_.pop_front();
    labels_.pop_front();
    return out;
}

Detector Detector::bootstrap(const DetectorConfig& config, PointSource& source) {
    config.validate();
    SlidingWindow window(config.window_size);
    std::size_t received = 0;
    while (!window.full()) {
        auto p = source.next();
        if (!p) {
            throw DataError("stream ended after " + std::to_string(received) + " points; bootstrap needs " +
                            std::to_string(config.window_size) + " (try a smaller --window)");
        }
        window.push(std::move(p->features));
        ++received;
    }
    return Detector(config, window.to_matrix());
}

Detector::Detector(const DetectorConfig& config, const Matrix& bootstrap_window)
    : config_(config), bootstrap_window_(bootstrap_window) {
    config_.validate();
    if (bootstrap_window_.rows() != config_.window_size) {
        throw std::invalid_argument("bootstrap window must hold exactly window_size points");
    }
    const auto sample = draw_sample(bootstrap_window_, 0);
    const Matrix training = bootstrap_window_.select_rows(sample.selected_indices);
    forest_ = iforest::build_forest(training, config_.ntrees, config_.height_limit(), config_.seed);
    points_seen_ = bootstrap_window_.rows();
}

sampling::SampleSelection Detector::draw_sample(const Matrix& population, std::uint64_t event) {
    const auto reduced = sampling::reduce_to_scalar(population, config_.reducer);
    const auto pi = sampling::compute_inclusion_probabilities(reduced, config_.sample_size);
    Rng rng(derive_seed(config_.seed, kSamplingStream | event));
    return sampling::cube_sample(population, pi, rng);
}

ChunkReport Detector::process_chunk(const Matrix& chunk) {
    ChunkReport report;
    report.chunk_index = chunks_;
    report.first_point = points_seen_;
    if (chunk.empty()) {
        return report;
    }
    if (chunk.cols() != forest_.dimension()) {
        throw std::invalid_argument("chunk has dimension " + std::to_string(chunk.cols()) + ", detector expects " +
                                    std::to_string(forest_.dimension()));
    }

    const auto score_start = Clock::now();
    const std::size_t n = chunk.rows();
    const std::size_t t_count = forest_.size();
    std::vector<double> paths(t_count * n);
    report.scores.assign(n, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double h = iforest::path_length(forest_[t].tree, chunk.row(i));
            paths[t * n + i] = h;
            report.scores[i] += h;
        }
    }
    for (double& s : report.scores) {
        s = iforest::score_from_path_length(s / static_cast<double>(t_count), forest_.training_size());
    }
    auto thresholded = apply_threshold(report.scores, config_.threshold);
    report.labels = std::move(thresholded.labels);
    report.threshold = thresholded.cutoff;

    report.flags_per_tree.assign(t_count, 0);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (iforest::score_from_path_length(paths[t * n + i], forest_.training_size()) >= report.threshold) {
                ++report.flags_per_tree[t];
            }
        }
    }
    const auto order = assign_ranks(forest_, report.flags_per_tree);
    report.score_time = since(score_start);

    const auto update_start = Clock::now();
    if (n >= config_.sample_size) {
        const auto sample = draw_sample(chunk, chunks_ + 1);
        const Matrix training = chunk.select_rows(sample.selected_indices);
        report.sample_indices = sample.selected_indices;
        report.trees_replaced.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config_.ktrees));
        for (std::size_t slot : report.trees_replaced) {
            Rng rng(derive_seed(config_.seed, forest_.next_serial()));
            forest_.replace(slot, iforest::build_itree(training, 0, config_.height_limit(), rng));
        }
        std::vector<std::size_t> fresh(t_count);
        for (std::size_t t = 0; t < t_count; ++t) {
            fresh[t] = forest_[t].anomalies_flagged;
        }
        assign_ranks(forest_, fresh);
        report.model_updated = true;
    }
    report.update_time = since(update_start);

    points_seen_ += n;
    ++chunks_;
    report.state_footprint = state_footprint();
    return report;
}

std::size_t Detector::state_footprint() const noexcept {
    return bootstrap_window_.rows() + forest_.node_count();
}

Detector run_stream(const DetectorConfig& config, PointSource& source, const ChunkSink& sink) {
    Detector detector = Detector::bootstrap(config, source);
    SlidingWindow chunk(config.window_size);
    std::vector<std::optional<bool>> labels;
    labels.reserve(config.window_size);
    auto flush = [&] {
        const auto report = detector.process_chunk(chunk.to_matrix());
        if (sink) {
            sink(report, labels);
        }
        chunk.clear();
        labels.clear();
    };
    while (auto p = source.next()) {
        chunk.push(std::move(p->features));
        labels.push_back(p->label);
        if (chunk.full()) {
            flush();
        }
    }
    if (!chunk.empty()) {
        flush();
    }
    return detector;
}

}  // namespace cubeforest::stream
