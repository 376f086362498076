#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cubeforest/matrix.hpp"
#include "cubeforest/random.hpp"

namespace cubeforest::iforest {

inline constexpr double kEulerGamma = 0.5772156649;

// Average path length of an unsuccessful BST search over n points.
double average_path_length(std::size_t n) noexcept;

// Score for a mean path length under training size psi: 2^(-E[h]/c(psi)).
double score_from_path_length(double mean_path_length, std::size_t training_size) noexcept;

// Smallest h with 2^h >= window size.
int default_height_limit(std::size_t window_size);

struct TreeNode {
    static constexpr std::int32_t kExternal = -1;

    std::int32_t attribute = kExternal;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;  // training points reaching this node
    double split_value = 0.0;

    bool is_external() const noexcept { return attribute == kExternal; }
    bool operator==(const TreeNode&) const = default;
};

// Nodes are stored flat; index 0 is the root.
class IsolationTree {
public:
    IsolationTree() = default;
    IsolationTree(std::vector<TreeNode> nodes, int height_limit, std::size_t training_size,
                  std::size_t dimension);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& root() const { return nodes_.front(); }
    int height_limit() const noexcept { return height_limit_; }
    std::size_t training_size() const noexcept { return training_size_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    int depth() const;

    bool operator==(const IsolationTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
    int height_limit_ = 0;
    std::size_t training_size_ = 0;
    std::size_t dimension_ = 0;
};

IsolationTree build_itree(const Matrix& sample, int current_height, int height_limit, Rng& rng);

// Edges to the external node reached, plus c(size) for the unresolved remainder.
double path_length(const IsolationTree& tree, std::span<const double> point);

struct TreeSlot {
    IsolationTree tree;
    std::size_t rank = 0;
    std::size_t anomalies_flagged = 0;
    std::uint64_t serial = 0;  // creation order; lower is older

    bool operator==(const TreeSlot&) const = default;
};

class Forest {
public:
    Forest() = default;
    // next_serial is raised past every serial already in use
    Forest(std::vector<TreeSlot> trees, std::size_t training_size, std::uint64_t next_serial = 0);

    std::size_t size() const noexcept { return trees_.size(); }
    bool empty() const noexcept { return trees_.empty(); }
    std::size_t training_size() const noexcept { return training_size_; }
    std::size_t dimension() const;
    std::size_t node_count() const noexcept;

    const std::vector<TreeSlot>& trees() const noexcept { return trees_; }
    std::vector<TreeSlot>& trees() noexcept { return trees_; }
    const TreeSlot& operator[](std::size_t i) const { return trees_[i]; }
    TreeSlot& operator[](std::size_t i) { return trees_[i]; }

    // Serial number the next new tree will receive.
    std::uint64_t next_serial() const noexcept { return next_serial_; }
    void replace(std::size_t slot, IsolationTree tree);

    double mean_path_length(std::span<const double> point) const;

    bool operator==(const Forest&) const = default;

private:
    std::vector<TreeSlot> trees_;
    std::size_t training_size_ = 0;
    std::uint64_t next_serial_ = 0;
};

// ntrees trees on one sample; tree i uses the stream derive_seed(seed, i).
Forest build_forest(const Matrix& sample, std::size_t ntrees, int height_limit, std::uint64_t seed);

double anomaly_score(const Forest& forest, std::span<const double> point);

// Versioned text format; doubles are written as hex floats so a round trip is exact.
void save_forest(const Forest& forest, std::ostream& out);
Forest load_forest(std::istream& in);

}  // namespace cubeforest::iforest
