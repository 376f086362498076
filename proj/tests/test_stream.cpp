#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cubeforest/error.hpp"
#include "cubeforest/stream.hpp"

using namespace cubeforest;
using namespace cubeforest::stream;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed, double shift = 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> g(shift, 1.0);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = g(rng);
    return m;
}

DetectorConfig small_config() {
    DetectorConfig c;
    c.window_size = 64;
    c.sample_size = 32;
    c.ntrees = 12;
    c.ktrees = 3;
    c.seed = 4;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    DetectorConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.height_limit() == 8);
    auto bad = c;
    bad.ktrees = 51;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.sample_size = 300;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.threshold = ThresholdPolicy::contamination(1.0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.window_size = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sliding window evicts oldest first") {
    SlidingWindow w(3);
    for (double v : {1.0, 2.0, 3.0, 4.0}) w.push({v});
    CHECK(w.full());
    const auto m = w.to_matrix();
    CHECK(m(0, 0) == 2.0);
    CHECK(m(2, 0) == 4.0);
    CHECK_THROWS_AS(SlidingWindow(0), std::invalid_argument);
}

TEST_CASE("shingle") {
    const std::vector<double> s{1, 2, 3, 4, 5};
    const auto sh = shingle(s, 3);
    REQUIRE(sh.size() == 3);
    CHECK(sh[0] == FeatureVector{1, 2, 3});
    CHECK(sh[2] == FeatureVector{3, 4, 5});
    CHECK(shingle(s, 6).empty());
    CHECK_THROWS_AS(shingle(s, 0), std::invalid_argument);
}

TEST_CASE("shingle source labels with the any rule") {
    Matrix m{{0}, {1}, {2}, {3}, {4}};
    MatrixSource scalar(m, {false, false, true, false, false});
    ShingleSource sh(scalar, 2);
    std::vector<FeatureVector> pts;
    std::vector<bool> labels;
    while (auto p = sh.next()) {
        pts.push_back(p->features);
        labels.push_back(*p->label);
    }
    REQUIRE(pts.size() == 4);
    CHECK(pts[1] == FeatureVector{1, 2});
    CHECK(labels == std::vector<bool>{false, true, true, false});
}

TEST_CASE("apply_threshold") {
    const std::vector<double> s{0.2, 0.9, 0.5, 0.7};
    const auto q = apply_threshold(s, ThresholdPolicy::contamination(0.5));
    CHECK(q.labels == std::vector<bool>{false, true, false, true});
    CHECK(q.cutoff == 0.7);
    const auto f = apply_threshold(s, ThresholdPolicy::fixed(0.5));
    CHECK(f.labels == std::vector<bool>{false, true, true, true});
    CHECK(f.cutoff == 0.5);
}

TEST_CASE("ranking: most flags first, older tree on ties") {
    auto forest = iforest::build_forest(gaussian(32, 2, 1), 4, 5, 0);
    forest[0].serial = 10;
    forest[1].serial = 11;
    forest[2].serial = 12;
    forest[3].serial = 3;
    const std::vector<std::size_t> flags{5, 9, 5, 1};
    const auto order = assign_ranks(forest, flags);
    CHECK(order == std::vector<std::size_t>{1, 0, 2, 3});
    CHECK(forest[1].rank == 0);
    CHECK(forest[3].rank == 3);
    CHECK(forest[2].anomalies_flagged == 5);
}

TEST_CASE("tree flags follow each tree's own score") {
    const Matrix train = gaussian(64, 2, 2);
    auto forest = iforest::build_forest(train, 6, 6, 1);
    const Matrix chunk = gaussian(20, 2, 3);
    const auto flags = count_tree_flags(forest, chunk, 0.55);
    for (std::size_t t = 0; t < forest.size(); ++t) {
        std::size_t want = 0;
        for (std::size_t i = 0; i < chunk.rows(); ++i)
            if (iforest::score_from_path_length(iforest::path_length(forest[t].tree, chunk.row(i)), 64) >= 0.55) ++want;
        CHECK(flags[t] == want);
    }
}

TEST_CASE("detector: bootstrap needs a full window") {
    const Matrix rows = gaussian(10, 2, 1);
    MatrixSource src(rows);
    CHECK_THROWS_WITH_AS(Detector::bootstrap(small_config(), src), doctest::Contains("stream ended after 10"), DataError);
}

TEST_CASE("detector: chunk contract") {
    const auto cfg = small_config();
    Detector det(cfg, gaussian(64, 3, 1));
    CHECK(det.forest().size() == cfg.ntrees);
    CHECK(det.forest().training_size() == cfg.sample_size);
    const auto footprint = det.state_footprint();
    CHECK(footprint == 64 + det.forest().node_count());

    const Matrix chunk = gaussian(64, 3, 2);
    // predict which slots must go from the pre-update forest
    auto copy = det.forest();
    const auto cutoff_probe = det.process_chunk(chunk);
    const auto expect_order = rank_trees(copy, chunk, cutoff_probe.threshold);
    CHECK(cutoff_probe.trees_replaced ==
          std::vector<std::size_t>(expect_order.begin(), expect_order.begin() + cfg.ktrees));
    CHECK(cutoff_probe.scores.size() == 64);
    CHECK(std::count(cutoff_probe.labels.begin(), cutoff_probe.labels.end(), true) == 7);  // ceil(0.1*64)
    CHECK(cutoff_probe.model_updated);
    CHECK(cutoff_probe.sample_indices.size() == cfg.sample_size);
    CHECK(det.forest().size() == cfg.ntrees);
    for (auto slot : cutoff_probe.trees_replaced) {
        CHECK(det.forest()[slot].anomalies_flagged == 0);
        CHECK(det.forest()[slot].serial >= cfg.ntrees);
    }
    CHECK(det.chunks_processed() == 1);
    CHECK(det.points_seen() == 128);
}

TEST_CASE("detector: empty and short chunks") {
    const auto cfg = small_config();
    Detector det(cfg, gaussian(64, 3, 1));
    const auto before = det.forest();
    const auto empty = det.process_chunk(Matrix{});
    CHECK(empty.scores.empty());
    CHECK(det.forest() == before);
    const auto r = det.process_chunk(gaussian(10, 3, 5));
    CHECK(r.scores.size() == 10);
    CHECK(!r.model_updated);
    CHECK(r.trees_replaced.empty());
    CHECK_THROWS_AS(det.process_chunk(gaussian(10, 2, 5)), std::invalid_argument);
}

TEST_CASE("run_stream: deterministic and covers every point after bootstrap") {
    const Matrix rows = gaussian(64 * 5 + 17, 2, 9);
    auto collect = [&](std::uint64_t seed) {
        auto cfg = small_config();
        cfg.seed = seed;
        MatrixSource src(rows);
        std::vector<double> scores;
        std::size_t expected_first = 64;
        run_stream(cfg, src, [&](const ChunkReport& r, std::span<const std::optional<bool>> labels) {
            CHECK(r.first_point == expected_first);
            CHECK(labels.size() == r.scores.size());
            expected_first += r.scores.size();
            scores.insert(scores.end(), r.scores.begin(), r.scores.end());
        });
        return scores;
    };
    const auto a = collect(1);
    CHECK(a.size() == rows.rows() - 64);
    CHECK(a == collect(1));
    CHECK(a != collect(2));
}

TEST_CASE("detector tracks a shift") {
    // a detector trained on N(0,1) adapts after the stream moves to N(6,1)
    auto cfg = small_config();
    cfg.ktrees = 6;
    Detector det(cfg, gaussian(64, 2, 1));
    const Matrix shifted = gaussian(64, 2, 2, 6.0);
    const auto first = det.process_chunk(shifted);
    for (int k = 0; k < 6; ++k) det.process_chunk(gaussian(64, 2, 10 + k, 6.0));
    const auto later = det.process_chunk(gaussian(64, 2, 99, 6.0));
    const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    CHECK(mean(later.scores) < mean(first.scores) - 0.1);
}
