#include "cubeforest/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cubeforest::iforest {
namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& sample, int height_limit, Rng& rng)
        : sample_(sample), height_limit_(height_limit), rng_(rng), order_(sample.rows()) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    std::vector<TreeNode> build(int current_height) {
        grow(0, order_.size(), current_height);
        return std::move(nodes_);
    }

private:
    std::int32_t grow(std::size_t begin, std::size_t end, int height) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(TreeNode{});
        nodes_[id].size = static_cast<std::uint32_t>(end - begin);
        if (end - begin <= 1 || height >= height_limit_) {
            return id;
        }

        std::vector<std::size_t> splittable;
        std::vector<double> lo(sample_.cols()), hi(sample_.cols());
        for (std::size_t j = 0; j < sample_.cols(); ++j) {
            lo[j] = std::numeric_limits<double>::infinity();
            hi[j] = -std::numeric_limits<double>::infinity();
        }
        for (std::size_t k = begin; k < end; ++k) {
            auto r = sample_.row(order_[k]);
            for (std::size_t j = 0; j < r.size(); ++j) {
                lo[j] = std::min(lo[j], r[j]);
                hi[j] = std::max(hi[j], r[j]);
            }
        }
        for (std::size_t j = 0; j < sample_.cols(); ++j) {
            if (hi[j] > lo[j]) {
                splittable.push_back(j);
            }
        }
        if (splittable.empty()) {
            return id;
        }

        std::uniform_int_distribution<std::size_t> pick(0, splittable.size() - 1);
        const std::size_t attr = splittable[pick(rng_)];
        double split = lo[attr] + uniform_open01(rng_) * (hi[attr] - lo[attr]);
        if (split <= lo[attr]) {
            split = std::nextafter(lo[attr], hi[attr]);
        } else if (split > hi[attr]) {
            split = hi[attr];
        }

        const auto mid = std::partition(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                                        order_.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t r) { return sample_(r, attr) < split; });
        const auto cut = static_cast<std::size_t>(mid - order_.begin());

        const auto left = grow(begin, cut, height + 1);
        const auto right = grow(cut, end, height + 1);
        TreeNode& node = nodes_[id];
        node.attribute = static_cast<std::int32_t>(attr);
        node.split_value = split;
        node.left = left;
        node.right = right;
        return id;
    }

    const Matrix& sample_;
    int height_limit_;
    Rng& rng_;
    std::vector<std::size_t> order_;
    std::vector<TreeNode> nodes_;
};

int subtree_depth(const std::vector<TreeNode>& nodes, std::int32_t id) {
    const TreeNode& n = nodes[id];
    if (n.is_external()) {
        return 0;
    }
    return 1 + std::max(subtree_depth(nodes, n.left), subtree_depth(nodes, n.right));
}

std::string hex(double v) {
    std::ostringstream os;
    os << std::hexfloat << v;
    return os.str();
}

double parse_hex(const std::string& token) {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) {
        throw std::runtime_error("bad number '" + token + "' in forest file");
    }
    return v;
}

void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) {
        throw std::runtime_error("forest file: expected '" + word + "', got '" + got + "'");
    }
}

}  // namespace

double average_path_length(std::size_t n) noexcept {
    if (n <= 1) {
        return 0.0;
    }
    const double m = static_cast<double>(n);
    const double harmonic = std::log(m - 1.0) + kEulerGamma;
    return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

double score_from_path_length(double mean_path_length, std::size_t training_size) noexcept {
    const double norm = average_path_length(training_size);
    if (norm <= 0.0) {
        // a one-point sample carries no information about isolation depth
        return 0.5;
    }
    return std::exp2(-mean_path_length / norm);
}

int default_height_limit(std::size_t window_size) {
    if (window_size == 0) {
        throw std::invalid_argument("window size must be positive");
    }
    int h = 0;
    while ((std::size_t{1} << h) < window_size) {
        ++h;
    }
    return h;
}

IsolationTree::IsolationTree(std::vector<TreeNode> nodes, int height_limit, std::size_t training_size,
                             std::size_t dimension)
    : nodes_(std::move(nodes)), height_limit_(height_limit), training_size_(training_size),
      dimension_(dimension) {
    if (nodes_.empty()) {
        throw std::invalid_argument("tree must have a root");
    }
}

int IsolationTree::depth() const { return subtree_depth(nodes_, 0); }

IsolationTree build_itree(const Matrix& sample, int current_height, int height_limit, Rng& rng) {
    if (sample.empty()) {
        throw std::invalid_argument("cannot build on empty sample");
    }
    if (height_limit < 0) {
        throw std::invalid_argument("height limit must be nonnegative");
    }
    TreeBuilder builder(sample, height_limit, rng);
    return IsolationTree(builder.build(current_height), height_limit, sample.rows(), sample.cols());
}

double path_length(const IsolationTree& tree, std::span<const double> point) {
    if (point.size() != tree.dimension()) {
        throw std::invalid_argument("point has dimension " + std::to_string(point.size()) +
                                    ", tree was trained on " + std::to_string(tree.dimension()));
    }
    const auto& nodes = tree.nodes();
    std::int32_t id = 0;
    int edges = 0;
    while (!nodes[id].is_external()) {
        const TreeNode& n = nodes[id];
        id = point[n.attribute] < n.split_value ? n.left : n.right;
        ++edges;
    }
    return edges + average_path_length(nodes[id].size);
}

Forest::Forest(std::vector<TreeSlot> trees, std::size_t training_size, std::uint64_t next_serial)
    : trees_(std::move(trees)), training_size_(training_size), next_serial_(next_serial) {
    for (const auto& t : trees_) {
        next_serial_ = std::max(next_serial_, t.serial + 1);
    }
}

std::size_t Forest::dimension() const { return trees_.empty() ? 0 : trees_.front().tree.dimension(); }

std::size_t Forest::node_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : trees_) {
        n += t.tree.node_count();
    }
    return n;
}

void Forest::replace(std::size_t slot, IsolationTree tree) {
    TreeSlot& s = trees_.at(slot);
    s.tree = std::move(tree);
    s.anomalies_flagged = 0;
    s.rank = 0;
    s.serial = next_serial_++;
}

double Forest::mean_path_length(std::span<const double> point) const {
    if (trees_.empty()) {
        throw std::logic_error("forest is empty");
    }
    double total = 0.0;
    for (const auto& t : trees_) {
        total += path_length(t.tree, point);
    }
    return total / static_cast<double>(trees_.size());
}

Forest build_forest(const Matrix& sample, std::size_t ntrees, int height_limit, std::uint64_t seed) {
    if (ntrees == 0) {
        throw std::invalid_argument("forest needs at least one tree");
    }
    std::vector<TreeSlot> trees(ntrees);
    for (std::size_t i = 0; i < ntrees; ++i) {
        Rng rng(derive_seed(seed, i));
        trees[i].tree = build_itree(sample, 0, height_limit, rng);
        trees[i].serial = i;
    }
    return Forest(std::move(trees), sample.rows());
}

double anomaly_score(const Forest& forest, std::span<const double> point) {
    return score_from_path_length(forest.mean_path_length(point), forest.training_size());
}

void save_forest(const Forest& forest, std::ostream& out) {
    out << "cubeforest-forest 1\n";
    out << "training_size " << forest.training_size() << " next_serial " << forest.next_serial()
        << " trees " << forest.size() << "\n";
    for (const auto& slot : forest.trees()) {
        const auto& t = slot.tree;
        out << "tree " << slot.serial << ' ' << slot.rank << ' ' << slot.anomalies_flagged << ' '
            << t.height_limit() << ' ' << t.training_size() << ' ' << t.dimension() << ' '
            << t.node_count() << "\n";
        for (const auto& n : t.nodes()) {
            out << n.attribute << ' ' << n.left << ' ' << n.right << ' ' << n.size << ' '
                << hex(n.split_value) << "\n";
        }
    }
}

Forest load_forest(std::istream& in) {
    expect(in, "cubeforest-forest");
    int version = 0;
    if (!(in >> version) || version != 1) {
        throw std::runtime_error("unsupported forest format version");
    }
    std::size_t training_size = 0, count = 0;
    std::uint64_t next_serial = 0;
    expect(in, "training_size");
    in >> training_size;
    expect(in, "next_serial");
    in >> next_serial;
    expect(in, "trees");
    in >> count;
    std::vector<TreeSlot> trees(count);
    for (auto& slot : trees) {
        expect(in, "tree");
        int height = 0;
        std::size_t tsize = 0, dim = 0, nodes = 0;
        if (!(in >> slot.serial >> slot.rank >> slot.anomalies_flagged >> height >> tsize >> dim >> nodes)) {
            throw std::runtime_error("forest file: truncated tree header");
        }
        std::vector<TreeNode> body(nodes);
        for (auto& n : body) {
            std::string split;
            if (!(in >> n.attribute >> n.left >> n.right >> n.size >> split)) {
                throw std::runtime_error("forest file: truncated node list");
            }
            n.split_value = parse_hex(split);
            // child links must point inside this tree
            if (!n.is_external() && (n.left <= 0 || n.right <= 0 ||
                                     static_cast<std::size_t>(std::max(n.left, n.right)) >= nodes)) {
                throw std::runtime_error("forest file: bad child index");
            }
        }
        slot.tree = IsolationTree(std::move(body), height, tsize, dim);
    }
    Forest forest(std::move(trees), training_size, next_serial);
    if (forest.next_serial() != next_serial) {
        throw std::runtime_error("forest file: inconsistent serial counter");
    }
    return forest;
}

}  // namespace cubeforest::iforest
