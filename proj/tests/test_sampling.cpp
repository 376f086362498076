#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cubeforest/sampling.hpp"
#include "oracles.hpp"

using namespace cubeforest;
using namespace cubeforest::sampling;

namespace {

InclusionProbabilities make_pi(std::vector<double> v) {
    InclusionProbabilities pi;
    pi.target_size = static_cast<std::size_t>(std::llround(std::accumulate(v.begin(), v.end(), 0.0)));
    pi.values = std::move(v);
    return pi;
}

std::size_t count_ones(const SampleSelection& s) {
    return static_cast<std::size_t>(std::count(s.indicator.begin(), s.indicator.end(), 1));
}

}  // namespace

TEST_CASE("reducer: zero-variance window gives eps everywhere") {
    Matrix w{{0, 0}, {0, 0}, {0, 0}};
    for (double s : reduce_to_scalar(w)) CHECK(s == doctest::Approx(kMinScore));
}

TEST_CASE("reducer: symmetric pair is equidistant") {
    Matrix w{{0}, {4}};
    const auto s = reduce_to_scalar(w);
    CHECK(s[0] == s[1]);
    CHECK(s[0] == doctest::Approx(kMinScore));
}

TEST_CASE("reducer: hand-computed centroid distances") {
    // centroid 2.25, distances 2.25 x3 and 6.75, shifted by the minimum
    Matrix w{{0}, {0}, {0}, {9}};
    const auto s = reduce_to_scalar(w);
    CHECK(s[0] == doctest::Approx(kMinScore));
    CHECK(s[3] == doctest::Approx(4.5 + kMinScore));
}

TEST_CASE("reducer: matches the centroid oracle on random windows") {
    Rng rng(7);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> rows(40, std::vector<double>(3));
    for (auto& r : rows)
        for (double& x : r) x = g(rng);
    const auto oracle_d = oracle::centroid_distances(rows);
    const double lo = *std::min_element(oracle_d.begin(), oracle_d.end());
    const auto s = reduce_to_scalar(Matrix::from_rows(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(s[i] == doctest::Approx(oracle_d[i] - lo + kMinScore).epsilon(1e-12));
}

TEST_CASE("reducer: pc1 scores the projection on the leading axis") {
    // all variance along x; projection magnitude is |x - mean|
    Matrix w{{-2, 0}, {-1, 0}, {0, 0}, {1, 0}, {2, 0}};
    const auto s = reduce_to_scalar(w, Reducer::PrincipalComponent);
    CHECK(s[2] == doctest::Approx(kMinScore));
    CHECK(s[0] == doctest::Approx(2.0 + kMinScore));
    CHECK(s[1] == doctest::Approx(s[3]));
}

TEST_CASE("reducer: errors") {
    CHECK_THROWS_WITH(reduce_to_scalar(Matrix{}), doctest::Contains("empty population"));
    Matrix w{{1, 2}, {NAN, 0}};
    CHECK_THROWS_WITH(reduce_to_scalar(w), doctest::Contains("row 1"));
    CHECK(parse_reducer("pc1") == Reducer::PrincipalComponent);
    CHECK(to_string(parse_reducer("centroid")) == "centroid");
    CHECK_THROWS_AS(parse_reducer("tsne"), std::invalid_argument);
}

TEST_CASE("inclusion probabilities: spec examples") {
    const std::vector<double> uniform{1, 1, 1, 1};
    for (double p : compute_inclusion_probabilities(uniform, 2).values) CHECK(p == doctest::Approx(0.5));

    const std::vector<double> skew{1, 1, 1, 9};
    const auto pi = compute_inclusion_probabilities(skew, 2);
    CHECK(pi.values[3] == 1.0);
    for (int i = 0; i < 3; ++i) CHECK(pi.values[i] == doctest::Approx(1.0 / 3.0));

    const std::vector<double> any{0.3, 7, 2, 1e-6, 4};
    for (double p : compute_inclusion_probabilities(any, 5).values) CHECK(p == 1.0);
}

TEST_CASE("inclusion probabilities: agree with the sorted oracle") {
    Rng rng(11);
    std::lognormal_distribution<double> heavy(0.0, 1.5);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 60;
        const std::size_t psi = 1 + rng() % n;
        std::vector<double> s(n);
        for (double& x : s) x = heavy(rng) + kMinScore;
        const auto pi = compute_inclusion_probabilities(s, psi);
        const auto want = oracle::capped_probabilities(s, psi);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(pi.values[i] == doctest::Approx(want[i]).epsilon(1e-9));
            CHECK(pi.values[i] > 0.0);
            CHECK(pi.values[i] <= 1.0);
            sum += pi.values[i];
        }
        CHECK(std::abs(sum - static_cast<double>(psi)) <= 1e-9);
    }
}

TEST_CASE("inclusion probabilities: errors") {
    const std::vector<double> s{1, 2};
    CHECK_THROWS_AS(compute_inclusion_probabilities(s, 3), std::invalid_argument);
    CHECK_THROWS_AS(compute_inclusion_probabilities(s, 0), std::invalid_argument);
}

TEST_CASE("balancing spec keeps pi in column 0") {
    const auto pi = make_pi({0.5, 0.25, 0.25});
    Matrix x{{1, 2}, {3, 4}, {5, 6}};
    const auto spec = BalancingSpec::with_features(pi, x);
    CHECK(spec.column_count() == 3);
    CHECK(spec.population() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(spec.pi(k) == pi.values[k]);
        CHECK(spec.scaled(k, 0) == 1.0);
    }
    CHECK(spec.scaled(1, 2) == doctest::Approx(16.0));
}

TEST_CASE("flight: two halves pick exactly one, each half the time") {
    const auto pi = make_pi({0.5, 0.5});
    const auto spec = BalancingSpec::fixed_size(pi);
    Rng rng(1);
    std::size_t first = 0;
    const std::size_t n = 10000;
    for (std::size_t r = 0; r < n; ++r) {
        const auto s = cube_land(cube_flight(pi, spec, rng), spec, rng);
        REQUIRE(s.size() == 1);
        first += s.indicator[0];
    }
    CHECK(oracle::within_3sigma(static_cast<double>(first) / n, 0.5, n));
}

TEST_CASE("flight: units at 1 stay selected") {
    const auto pi = make_pi({1, 1, 0.5, 0.5});
    const auto spec = BalancingSpec::fixed_size(pi);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const auto s = cube_land(cube_flight(pi, spec, rng), spec, rng);
        CHECK(s.indicator[0] == 1);
        CHECK(s.indicator[1] == 1);
        CHECK(s.indicator[2] + s.indicator[3] == 1);
    }
}

TEST_CASE("flight: quarter probabilities") {
    const auto pi = make_pi({0.25, 0.25, 0.25, 0.25});
    const auto spec = BalancingSpec::fixed_size(pi);
    Rng rng(3);
    std::vector<std::size_t> hits(4, 0);
    const std::size_t n = 10000;
    for (std::size_t r = 0; r < n; ++r) {
        const auto s = cube_land(cube_flight(pi, spec, rng), spec, rng);
        REQUIRE(s.size() == 1);
        for (std::size_t k = 0; k < 4; ++k) hits[k] += s.indicator[k];
    }
    for (auto h : hits) CHECK(oracle::within_3sigma(static_cast<double>(h) / n, 0.25, n));
}

TEST_CASE("flight: balance is preserved at every step and few units stay fractional") {
    Rng data_rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 8 + data_rng() % 120;
        const std::size_t psi = 1 + data_rng() % (n - 1);
        Matrix x(n, 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 3; ++j) x(i, j) = g(data_rng);
        const auto pi = compute_inclusion_probabilities(reduce_to_scalar(x), psi);
        const auto spec = BalancingSpec::with_features(pi, x);
        const auto target = spec.balance(pi.values);
        double worst = 0.0;
        std::size_t steps = 0;
        Rng rng(trial);
        const auto out = cube_flight(pi, spec, rng, [&](std::span<const double> v) {
            const auto b = spec.balance(v);
            for (std::size_t j = 0; j < b.size(); ++j) worst = std::max(worst, std::abs(b[j] - target[j]));
            ++steps;
        });
        CHECK(steps > 0);
        CHECK(worst <= 1e-9);
        const auto fractional = std::count_if(out.begin(), out.end(), [](double v) { return v > 0.0 && v < 1.0; });
        CHECK(static_cast<std::size_t>(fractional) <= spec.column_count());
    }
}

TEST_CASE("landing: integral input comes back unchanged") {
    const auto pi = make_pi({0.5, 0.5, 0.5, 0.5});
    const auto spec = BalancingSpec::fixed_size(pi);
    Rng rng(0);
    const std::vector<double> partial{1, 0, 1, 0};
    const auto s = cube_land(partial, spec, rng);
    CHECK(s.indicator == std::vector<int>{1, 0, 1, 0});
    CHECK(s.selected_indices == std::vector<std::size_t>{0, 2});
}

TEST_CASE("landing: one of the two halves") {
    // the walk has already settled units 0 and 1; pi only has to be positive
    const auto pi = make_pi({1, 1.0 / 3, 1.0 / 3, 1.0 / 3});
    const auto spec = BalancingSpec::fixed_size(pi);
    const std::vector<double> partial{1, 0, 0.5, 0.5};
    Rng rng(9);
    std::size_t third = 0;
    const std::size_t n = 10000;
    for (std::size_t r = 0; r < n; ++r) {
        const auto s = cube_land(partial, spec, rng);
        REQUIRE(s.indicator[0] == 1);
        REQUIRE(s.indicator[1] == 0);
        REQUIRE(s.indicator[2] + s.indicator[3] == 1);
        third += s.indicator[2];
    }
    CHECK(oracle::within_3sigma(static_cast<double>(third) / n, 0.5, n));
}

TEST_CASE("landing: adversarial auxiliaries keep the size exact") {
    Rng data_rng(17);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto pi = make_pi({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3});
        Matrix extra(6, 2);
        for (std::size_t i = 0; i < 6; ++i) {
            extra(i, 0) = u(data_rng);
            extra(i, 1) = (i % 2 == 0) ? extra(i, 0) * 2.0 : 1e-9;  // nearly collinear
        }
        const auto spec = BalancingSpec::with_columns(pi, extra);
        Rng rng(seed);
        const auto s = cube_land(cube_flight(pi, spec, rng), spec, rng);
        CHECK(s.size() == 2);
        CHECK(count_ones(s) == 2);
    }
}

TEST_CASE("cube_sample: census, fixed size and skewed Monte-Carlo") {
    Matrix w(8, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        w(i, 0) = static_cast<double>(i);
        w(i, 1) = static_cast<double>(i * i);
    }
    Rng rng(2);
    const auto all = cube_sample(w, make_pi(std::vector<double>(8, 1.0)), rng);
    CHECK(all.size() == 8);

    const auto half = make_pi(std::vector<double>(8, 0.5));
    for (int r = 0; r < 500; ++r) CHECK(cube_sample(w, half, rng).size() == 4);

    Matrix two{{0.0}, {1.0}};
    const auto pi = make_pi({0.1, 0.9});
    std::size_t second = 0;
    const std::size_t n = 10000;
    for (std::size_t r = 0; r < n; ++r) {
        const auto s = cube_sample(two, pi, rng);
        REQUIRE(s.size() == 1);
        second += s.indicator[1];
    }
    CHECK(oracle::within_3sigma(static_cast<double>(second) / n, 0.9, n));
}

TEST_CASE("cube_sample: deterministic for a fixed seed") {
    Matrix w(50, 2);
    for (std::size_t i = 0; i < 50; ++i) {
        w(i, 0) = std::sin(static_cast<double>(i));
        w(i, 1) = std::cos(3.0 * static_cast<double>(i));
    }
    const auto pi = compute_inclusion_probabilities(reduce_to_scalar(w), 12);
    Rng a(99), b(99);
    CHECK(cube_sample(w, pi, a).selected_indices == cube_sample(w, pi, b).selected_indices);
}
