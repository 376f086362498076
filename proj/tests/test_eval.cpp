#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cubeforest/eval.hpp"
#include "cubeforest/random.hpp"
#include "oracles.hpp"

using namespace cubeforest;
using namespace cubeforest::eval;

namespace {

LabeledScores ls(std::vector<double> s, std::vector<bool> l) { return {std::move(s), std::move(l), {}}; }

constexpr bool N = false, A = true;

}  // namespace

TEST_CASE("auc: spec examples") {
    CHECK(auc_roc(ls({0.1, 0.2, 0.8, 0.9}, {N, N, A, A})) == 1.0);
    CHECK(auc_roc(ls({0.8, 0.9, 0.1, 0.2}, {N, N, A, A})) == 0.0);
    CHECK(auc_roc(ls({0.5, 0.5, 0.5, 0.5}, {N, N, A, A})) == 0.5);
    CHECK(oracle::pairwise_auc({0.5, 0.5, 0.5, 0.5}, {N, N, A, A}) == 0.5);
}

TEST_CASE("auc: one class is undefined") {
    CHECK_THROWS_WITH(auc_roc(ls({0.1, 0.2}, {A, A})), doctest::Contains("AUC undefined"));
    CHECK_THROWS_WITH(auc_roc(ls({0.1, 0.2}, {N, N})), doctest::Contains("AUC undefined"));
    CHECK_THROWS_AS(auc_roc(ls({0.1}, {N, A})), std::invalid_argument);
}

TEST_CASE("auc: equals the pairwise oracle on small tied instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 + rng() % 11;
        std::vector<double> s(n);
        std::vector<bool> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 5) / 4.0;  // coarse grid forces ties
            l[i] = rng() % 2 == 0;
        }
        l[0] = true;
        l[1] = false;
        CHECK(std::abs(auc_roc(ls(s, l)) - oracle::pairwise_auc(s, l)) <= 1e-12);
    }
}

TEST_CASE("auc: monotone invariance and complement") {
    Rng rng(5);
    std::normal_distribution<double> g;
    std::vector<double> s(200), neg(200), warped(200);
    std::vector<bool> l(200);
    for (std::size_t i = 0; i < s.size(); ++i) {
        l[i] = i % 3 == 0;
        s[i] = g(rng) + (l[i] ? 1.0 : 0.0);
        neg[i] = -s[i];
        warped[i] = std::exp(3.0 * s[i]);
    }
    const double a = auc_roc(ls(s, l));
    CHECK(auc_roc(ls(warped, l)) == doctest::Approx(a).epsilon(1e-12));
    CHECK(a + auc_roc(ls(neg, l)) == doctest::Approx(1.0));
}

TEST_CASE("threshold: counts and ties") {
    std::vector<double> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto f = threshold_labels(ten, 0.10);
    CHECK(std::count(f.begin(), f.end(), true) == 1);
    CHECK(f[9]);

    std::vector<double> equal{0.3, 0.3, 0.3, 0.3};
    CHECK(threshold_labels(equal, 0.5) == std::vector<bool>{true, true, false, false});

    // ceil(0.35 * 683) = 240
    CHECK(contamination_count(683, 0.35) == 240);
    CHECK(contamination_count(100, 0.07) == 7);
    CHECK(contamination_count(10, 0.1) == 1);
    for (std::size_t n = 1; n < 300; n += 7)
        for (double q : {0.001, 0.0039, 0.05, 0.1, 0.32, 0.5, 0.99})
            CHECK(contamination_count(n, q) == static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9)));
    CHECK_THROWS_AS(threshold_labels(ten, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_labels(ten, 1.0), std::invalid_argument);
}

TEST_CASE("per-type accuracy") {
    LabeledScores d;
    d.labels = {A, A, A, N, N};
    d.types = {AnomalyType::Point, AnomalyType::Collective, AnomalyType::Collective, AnomalyType::None,
               AnomalyType::None};
    d.scores.assign(5, 0.0);
    const auto acc = per_type_accuracy(d, {true, false, false, false, true});
    CHECK(acc.at(AnomalyType::Point) == 1.0);
    CHECK(acc.at(AnomalyType::Collective) == 0.0);
    CHECK(acc.at(AnomalyType::None) == 0.5);
    CHECK(acc.count(AnomalyType::Contextual) == 0);
    CHECK(parse_anomaly_type("contextual") == AnomalyType::Contextual);
    CHECK(to_string(AnomalyType::None) == "none");
    CHECK_THROWS_AS(parse_anomaly_type("weird"), std::invalid_argument);
}

TEST_CASE("metrics round trip") {
    MetricsRecord a;
    a.add("dataset", "breastw").add("auc", 0.1 + 0.2).add("rows", std::size_t{683});
    MetricsRecord b;
    b.add("note", "second");
    std::stringstream ss;
    write_metrics(ss, {a, b});
    CHECK(ss.str().rfind(std::string(kMetricsHeader), 0) == 0);
    const auto back = read_metrics(ss);
    REQUIRE(back.size() == 2);
    CHECK(*back[0].find("dataset") == "breastw");
    CHECK(std::stod(*back[0].find("auc")) == 0.1 + 0.2);
    CHECK(*back[0].find("rows") == "683");
    CHECK(back[1].find("auc") == nullptr);
    CHECK_THROWS_AS(MetricsRecord{}.add("a=b", "x"), std::invalid_argument);
}
