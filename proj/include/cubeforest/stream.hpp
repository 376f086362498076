#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cubeforest/iforest.hpp"
#include "cubeforest/matrix.hpp"
#include "cubeforest/sampling.hpp"

namespace cubeforest::stream {

struct LabeledPoint {
    FeatureVector features;
    std::optional<bool> label;
};

// Pull-based source of stream points, in arrival order.
class PointSource {
public:
    virtual ~PointSource() = default;
    // nullopt at end of stream
    virtual std::optional<LabeledPoint> next() = 0;
};

// Replays the rows of an in-memory matrix.
class MatrixSource final : public PointSource {
public:
    explicit MatrixSource(const Matrix& rows, std::vector<bool> labels = {});
    std::optional<LabeledPoint> next() override;

private:
    const Matrix& rows_;
    std::vector<bool> labels_;
    std::size_t pos_ = 0;
};

struct ThresholdPolicy {
    enum class Kind { Contamination, FixedCutoff };
    Kind kind = Kind::Contamination;
    double value = 0.1;  // fraction q, or score cutoff

    static ThresholdPolicy contamination(double q) { return {Kind::Contamination, q}; }
    static ThresholdPolicy fixed(double cutoff = 0.5) { return {Kind::FixedCutoff, cutoff}; }
};

struct DetectorConfig {
    std::size_t window_size = 256;
    std::size_t ntrees = 50;
    std::size_t ktrees = 10;
    std::size_t sample_size = 256;
    ThresholdPolicy threshold{};
    sampling::Reducer reducer = sampling::Reducer::CentroidDistance;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument when an invariant does not hold.
    void validate() const;
    int height_limit() const { return iforest::default_height_limit(window_size); }
};

// FIFO buffer of the most recent points, capacity fixed at construction.
class SlidingWindow {
public:
    explicit SlidingWindow(std::size_t capacity);

    void push(FeatureVector point);
    void clear() noexcept { buffer_.clear(); }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return buffer_.size(); }
    bool full() const noexcept { return buffer_.size() == capacity_; }
    bool empty() const noexcept { return buffer_.empty(); }

    // Oldest point first.
    Matrix to_matrix() const;

private:
    std::size_t capacity_;
    std::deque<FeatureVector> buffer_;
};

struct ChunkReport {
    std::size_t chunk_index = 0;   // 0 for the first chunk after bootstrap
    std::size_t first_point = 0;   // stream position of the first chunk point
    std::vector<double> scores;
    std::vector<bool> labels;
    double threshold = 0.0;        // score cutoff in effect for this chunk
    std::vector<std::size_t> flags_per_tree;
    std::vector<std::size_t> trees_replaced;  // forest slots, retirement order
    std::vector<std::size_t> sample_indices;  // chunk rows used to rebuild
    bool model_updated = false;
    std::size_t state_footprint = 0;  // Detector::state_footprint() after the update
    std::chrono::microseconds score_time{0};
    std::chrono::microseconds update_time{0};
};

// Forest-level labels and the cutoff that produced them.
struct Thresholded {
    std::vector<bool> labels;
    double cutoff = 0.0;
};
Thresholded apply_threshold(std::span<const double> scores, const ThresholdPolicy& policy);

// Per-tree flag counts: tree t flags point x when its own score
// 2^(-h_t(x)/c(psi)) reaches `cutoff`.
std::vector<std::size_t> count_tree_flags(const iforest::Forest& forest, const Matrix& chunk, double cutoff);

// Stores the counts and gives rank 0 to the tree with the most flags; ties
// go to the older tree (lower serial). Returns slots ordered by rank.
std::vector<std::size_t> assign_ranks(iforest::Forest& forest, std::span<const std::size_t> flags);

// count_tree_flags followed by assign_ranks.
std::vector<std::size_t> rank_trees(iforest::Forest& forest, const Matrix& chunk, double cutoff);

// Overlapping width-n windows with stride 1.
std::vector<FeatureVector> shingle(std::span<const double> series, std::size_t width);

// Lazy shingling of a univariate source. A shingle is labeled anomalous when
// any sample it covers is.
class ShingleSource final : public PointSource {
public:
    ShingleSource(PointSource& scalars, std::size_t width);
    std::optional<LabeledPoint> next() override;

private:
    PointSource& inner_;
    std::size_t width_;
    std::deque<double> values_;
    std::deque<std::optional<bool>> labels_;
};

class Detector {
public:
    // Consumes exactly window_size points from the source and trains the first forest.
    static Detector bootstrap(const DetectorConfig& config, PointSource& source);
    Detector(const DetectorConfig& config, const Matrix& bootstrap_window);

    // Scores the chunk with the current forest, then updates the forest.
    ChunkReport process_chunk(const Matrix& chunk);

    const DetectorConfig& config() const noexcept { return config_; }
    const iforest::Forest& forest() const noexcept { return forest_; }
    const Matrix& bootstrap_window() const noexcept { return bootstrap_window_; }
    std::size_t points_seen() const noexcept { return points_seen_; }
    std::size_t chunks_processed() const noexcept { return chunks_; }

    // Rows held by the detector plus the forest's node count.
    std::size_t state_footprint() const noexcept;

private:
    sampling::SampleSelection draw_sample(const Matrix& population, std::uint64_t event);

    DetectorConfig config_;
    Matrix bootstrap_window_;
    iforest::Forest forest_;
    std::size_t points_seen_ = 0;
    std::size_t chunks_ = 0;
};

// Reads the source in chunks of window_size after bootstrap and hands every
// report to `sink` together with the labels carried by the chunk's points.
using ChunkSink = std::function<void(const ChunkReport&, std::span<const std::optional<bool>>)>;
Detector run_stream(const DetectorConfig& config, PointSource& source, const ChunkSink& sink);

}  // namespace cubeforest::stream
