#include "cubeforest/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cubeforest::sampling {
namespace {

// Entries this close to 0 or 1 are treated as resolved.
constexpr double kSnap = 1e-12;

bool is_fractional(double v) noexcept { return v > kSnap && v < 1.0 - kSnap; }

void check_finite(const Matrix& window) {
    for (std::size_t i = 0; i < window.rows(); ++i) {
        for (double v : window.row(i)) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("non-finite feature value in row " + std::to_string(i));
            }
        }
    }
}

std::vector<double> centroid(const Matrix& window) {
    std::vector<double> c(window.cols(), 0.0);
    for (std::size_t i = 0; i < window.rows(); ++i) {
        auto r = window.row(i);
        for (std::size_t j = 0; j < c.size(); ++j) {
            c[j] += r[j];
        }
    }
    for (double& v : c) {
        v /= static_cast<double>(window.rows());
    }
    return c;
}

std::vector<double> centroid_distances(const Matrix& window) {
    const auto c = centroid(window);
    std::vector<double> out(window.rows());
    for (std::size_t i = 0; i < window.rows(); ++i) {
        auto r = window.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            s += (r[j] - c[j]) * (r[j] - c[j]);
        }
        out[i] = std::sqrt(s);
    }
    return out;
}

std::vector<double> principal_projections(const Matrix& window) {
    const auto n = static_cast<Eigen::Index>(window.rows());
    const auto d = static_cast<Eigen::Index>(window.cols());
    const auto c = centroid(window);
    Eigen::MatrixXd centered(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            centered(i, j) = window(i, j) - c[j];
        }
    }
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // eigenvalues are sorted ascending
    const Eigen::VectorXd axis = solver.eigenvectors().col(d - 1);
    const Eigen::VectorXd proj = centered * axis;
    std::vector<double> out(window.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = std::abs(proj(i));
    }
    return out;
}

// A nonzero u with B u = 0, if one exists. B has one row per constraint and
// one column per unit still in play.
bool null_direction(Eigen::MatrixXd b, Eigen::VectorXd& u) {
    // row scaling leaves the null space unchanged and evens out the singular values
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
        const double m = b.row(r).cwiseAbs().maxCoeff();
        if (m > 0.0) {
            b.row(r) /= m;
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::Index rank = svd.rank();
    if (rank >= b.cols()) {
        return false;
    }
    const Eigen::MatrixXd& v = svd.matrixV();
    u = v.col(b.cols() - 1);
    // one step of refinement: strip what is left of u in the row space
    const Eigen::VectorXd residual = b * u;
    const Eigen::VectorXd coeff = svd.matrixU().leftCols(rank).transpose() * residual;
    u -= v.leftCols(rank) * (coeff.array() / svd.singularValues().head(rank).array()).matrix();
    const double norm = u.cwiseAbs().maxCoeff();
    if (!(norm > 0.0)) {
        return false;
    }
    u /= norm;
    return true;
}

}  // namespace

std::string_view to_string(Reducer r) noexcept {
    switch (r) {
        case Reducer::CentroidDistance:
            return "centroid";
        case Reducer::PrincipalComponent:
            return "pc1";
    }
    return "unknown";
}

Reducer parse_reducer(std::string_view name) {
    if (name == "centroid") {
        return Reducer::CentroidDistance;
    }
    if (name == "pc1") {
        return Reducer::PrincipalComponent;
    }
    throw std::invalid_argument("unknown reducer '" + std::string(name) + "' (expected centroid or pc1)");
}

std::vector<double> reduce_to_scalar(const Matrix& window, Reducer reducer) {
    if (window.empty()) {
        throw std::invalid_argument("empty population");
    }
    if (window.cols() == 0) {
        throw std::invalid_argument("points must have at least one feature");
    }
    check_finite(window);

    std::vector<double> raw = reducer == Reducer::CentroidDistance ? centroid_distances(window)
                                                                   : principal_projections(window);
    const double lo = *std::min_element(raw.begin(), raw.end());
    for (double& v : raw) {
        v = v - lo + kMinScore;
    }
    return raw;
}

InclusionProbabilities compute_inclusion_probabilities(std::span<const double> scores,
                                                        std::size_t target_size) {
    const std::size_t n = scores.size();
    if (target_size == 0) {
        throw std::invalid_argument("sample size must be positive");
    }
    if (target_size > n) {
        throw std::invalid_argument("sample size " + std::to_string(target_size) +
                                    " exceeds population size " + std::to_string(n));
    }
    for (double s : scores) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("scores must be finite and strictly positive");
        }
    }

    InclusionProbabilities pi{std::vector<double>(n, 0.0), target_size};
    if (target_size == n) {
        std::fill(pi.values.begin(), pi.values.end(), 1.0);
        return pi;
    }

    std::vector<bool> capped(n, false);
    std::size_t n_capped = 0;
    for (;;) {
        double free_total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!capped[i]) {
                free_total += scores[i];
            }
        }
        const double remaining = static_cast<double>(target_size - n_capped);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (capped[i]) {
                continue;
            }
            pi.values[i] = scores[i] * remaining / free_total;
            if (pi.values[i] >= 1.0 - kSnap) {
                capped[i] = true;
                ++n_capped;
                pi.values[i] = 1.0;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
    }
    return pi;
}

BalancingSpec BalancingSpec::fixed_size(const InclusionProbabilities& pi) {
    return with_columns(pi, Matrix(pi.size(), 0));
}

BalancingSpec BalancingSpec::with_features(const InclusionProbabilities& pi, const Matrix& features) {
    return with_columns(pi, features);
}

BalancingSpec BalancingSpec::with_columns(const InclusionProbabilities& pi, const Matrix& extra) {
    if (extra.rows() != pi.size()) {
        throw std::invalid_argument("auxiliary rows (" + std::to_string(extra.rows()) +
                                    ") do not match population size (" + std::to_string(pi.size()) + ")");
    }
    Matrix aux(pi.size(), extra.cols() + 1);
    for (std::size_t k = 0; k < pi.size(); ++k) {
        if (!(pi.values[k] > 0.0 && pi.values[k] <= 1.0)) {
            throw std::invalid_argument("inclusion probability " + std::to_string(k) + " outside (0,1]");
        }
        aux(k, 0) = pi.values[k];
        for (std::size_t j = 0; j < extra.cols(); ++j) {
            aux(k, j + 1) = extra(k, j);
        }
    }
    return BalancingSpec(std::move(aux));
}

std::vector<double> BalancingSpec::balance(std::span<const double> v, std::size_t columns) const {
    std::vector<double> out(columns, 0.0);
    for (std::size_t k = 0; k < population(); ++k) {
        if (v[k] == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < columns; ++j) {
            out[j] += scaled(k, j) * v[k];
        }
    }
    return out;
}

std::vector<double> cube_flight(std::span<const double> start, const BalancingSpec& spec,
                                std::size_t columns, Rng& rng, const FlightObserver& observer) {
    if (start.size() != spec.population()) {
        throw std::invalid_argument("probability vector does not match balancing spec");
    }
    if (columns == 0 || columns > spec.column_count()) {
        throw std::invalid_argument("invalid number of balancing columns");
    }
    std::vector<double> v(start.begin(), start.end());
    const std::size_t p = columns;

    std::vector<std::size_t> active;
    Eigen::VectorXd u;
    // resolved units never become fractional again, so the scan can resume
    std::size_t scan_from = 0;
    for (;;) {
        active.clear();
        for (std::size_t k = scan_from; k < v.size() && active.size() < p + 1; ++k) {
            if (is_fractional(v[k])) {
                active.push_back(k);
            }
        }
        if (active.empty()) {
            break;
        }
        scan_from = active.front();

        const auto q = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd b(static_cast<Eigen::Index>(p), q);
        for (Eigen::Index i = 0; i < q; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                b(static_cast<Eigen::Index>(j), i) = spec.scaled(active[i], j);
            }
        }
        if (!null_direction(b, u)) {
            break;
        }

        // largest steps along +u and -u that keep every coordinate in [0,1]
        double up = std::numeric_limits<double>::infinity();
        double down = std::numeric_limits<double>::infinity();
        Eigen::Index up_hit = 0, down_hit = 0;
        for (Eigen::Index i = 0; i < q; ++i) {
            const double x = v[active[i]];
            const double d = u(i);
            if (d == 0.0) {
                continue;
            }
            const double to_up = d > 0.0 ? (1.0 - x) / d : x / -d;
            const double to_down = d > 0.0 ? x / d : (1.0 - x) / -d;
            if (to_up < up) {
                up = to_up;
                up_hit = i;
            }
            if (to_down < down) {
                down = to_down;
                down_hit = i;
            }
        }

        // E[step] = 0: +up with probability down/(up+down)
        const bool go_up = uniform_open01(rng) < down / (up + down);
        const double step = go_up ? up : -down;
        const Eigen::Index hit = go_up ? up_hit : down_hit;
        for (Eigen::Index i = 0; i < q; ++i) {
            double& x = v[active[i]];
            if (i == hit) {
                // lands on the boundary by construction
                x = (step * u(i) > 0.0) ? 1.0 : 0.0;
                continue;
            }
            x += step * u(i);
            if (x <= kSnap) {
                x = 0.0;
            } else if (x >= 1.0 - kSnap) {
                x = 1.0;
            }
        }
        if (observer) {
            observer(v);
        }
    }
    return v;
}

SampleSelection cube_land(std::span<const double> partial, const BalancingSpec& spec, Rng& rng) {
    if (partial.size() != spec.population()) {
        throw std::invalid_argument("probability vector does not match balancing spec");
    }
    std::vector<double> v(partial.begin(), partial.end());
    auto any_fractional = [&v] { return std::any_of(v.begin(), v.end(), is_fractional); };

    // the first pass uses every column, so a partial that did not come out of
    // a finished flight is still walked randomly
    for (std::size_t columns = spec.column_count(); columns >= 1 && any_fractional(); --columns) {
        v = cube_flight(v, spec, columns, rng);
    }
    if (any_fractional()) {
        // Only rounding residue can remain once the size constraint alone is
        // active: the fractional mass is then an integer up to ~1e-12.
        std::vector<std::size_t> rest;
        double mass = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (is_fractional(v[k])) {
                rest.push_back(k);
                mass += v[k];
            }
        }
        std::stable_sort(rest.begin(), rest.end(), [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
        const auto take = static_cast<std::size_t>(std::llround(mass));
        for (std::size_t i = 0; i < rest.size(); ++i) {
            v[rest[i]] = i < take ? 1.0 : 0.0;
        }
    }

    SampleSelection out;
    out.indicator.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.indicator[k] = v[k] > 0.5 ? 1 : 0;
        if (out.indicator[k] == 1) {
            out.selected_indices.push_back(k);
        }
    }
    return out;
}

SampleSelection cube_sample(const Matrix& window, const InclusionProbabilities& pi, Rng& rng) {
    if (window.rows() != pi.size()) {
        throw std::invalid_argument("window size does not match inclusion probabilities");
    }
    const auto spec = BalancingSpec::with_features(pi, window);
    const auto partial = cube_flight(pi, spec, rng);
    return cube_land(partial, spec, rng);
}

}  // namespace cubeforest::sampling
