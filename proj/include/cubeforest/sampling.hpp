#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubeforest/matrix.hpp"
#include "cubeforest/random.hpp"

namespace cubeforest::sampling {

// Smallest scalar score after shifting; keeps every point selectable.
inline constexpr double kMinScore = 1e-6;

// Tolerance for integrality and balance checks.
inline constexpr double kBalanceTolerance = 1e-9;

enum class Reducer {
    CentroidDistance,   // Euclidean distance to the window centroid
    PrincipalComponent  // |projection on the first principal axis|
};

std::string_view to_string(Reducer r) noexcept;
// Accepts "centroid" and "pc1". Throws std::invalid_argument otherwise.
Reducer parse_reducer(std::string_view name);

// One strictly positive score per window row, shifted so the minimum is kMinScore.
std::vector<double> reduce_to_scalar(const Matrix& window, Reducer reducer = Reducer::CentroidDistance);

struct InclusionProbabilities {
    std::vector<double> values;
    std::size_t target_size = 0;

    std::size_t size() const noexcept { return values.size(); }
};

// pi_i proportional to scores, summing to target_size, capped at 1 with the
// remainder rescaled until no entry exceeds 1.
InclusionProbabilities compute_inclusion_probabilities(std::span<const double> scores,
                                                        std::size_t target_size);

// Auxiliary variables for the cube method. Row k holds the auxiliaries of unit k;
// column 0 is the inclusion probability itself, which pins the sample size.
class BalancingSpec {
public:
    // [pi] only: fixed-size unequal probability sampling.
    static BalancingSpec fixed_size(const InclusionProbabilities& pi);
    // [pi, x_1, ..., x_d]: balanced on feature totals as well.
    static BalancingSpec with_features(const InclusionProbabilities& pi, const Matrix& features);
    // [pi, extra columns...]; `extra` must have one row per unit.
    static BalancingSpec with_columns(const InclusionProbabilities& pi, const Matrix& extra);

    const Matrix& auxiliaries() const noexcept { return aux_; }
    std::size_t column_count() const noexcept { return aux_.cols(); }
    std::size_t population() const noexcept { return aux_.rows(); }
    double pi(std::size_t k) const { return aux_(k, 0); }

    // Balancing matrix entry a_kj / pi_k.
    double scaled(std::size_t k, std::size_t j) const { return aux_(k, j) / aux_(k, 0); }

    // A^T v over the first `columns` constraints, A = auxiliaries / pi.
    std::vector<double> balance(std::span<const double> v, std::size_t columns) const;
    std::vector<double> balance(std::span<const double> v) const {
        return balance(v, column_count());
    }

private:
    explicit BalancingSpec(Matrix aux) : aux_(std::move(aux)) {}
    Matrix aux_;
};

struct SampleSelection {
    std::vector<int> indicator;
    std::vector<std::size_t> selected_indices;

    std::size_t size() const noexcept { return selected_indices.size(); }
};

// Called with the probability vector after every flight step.
using FlightObserver = std::function<void(std::span<const double>)>;

// Flight phase: random walk on the constraint subspace until no direction
// preserving the first `columns` balancing equations remains.
std::vector<double> cube_flight(std::span<const double> start, const BalancingSpec& spec,
                                std::size_t columns, Rng& rng,
                                const FlightObserver& observer = {});

inline std::vector<double> cube_flight(const InclusionProbabilities& pi, const BalancingSpec& spec,
                                       Rng& rng, const FlightObserver& observer = {}) {
    return cube_flight(pi.values, spec, spec.column_count(), rng, observer);
}

// Landing phase by constraint suppression: drop the last balancing column,
// fly again, repeat. Column 0 is kept to the end, so the size stays exact.
SampleSelection cube_land(std::span<const double> partial, const BalancingSpec& spec, Rng& rng);

// Flight then landing, balanced on [pi, window features].
SampleSelection cube_sample(const Matrix& window, const InclusionProbabilities& pi, Rng& rng);

}  // namespace cubeforest::sampling
