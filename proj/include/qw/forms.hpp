#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qw/weights.hpp"

namespace qw {

// Coordinates of weight atoms over the dictionary {shape_s (x) e_j}, where each shape is a
// unit-amplitude analytic profile. Distinct shapes are linearly independent functions, so a
// weight is determined by its form matrix sum_i lambda_i x_i x_i^*.
class ShapeDictionary {
public:
    explicit ShapeDictionary(std::size_t dim_k);

    // Registers the shapes of mu; false when mu has grid-sampled components.
    bool add(const BoundaryWeight& mu);
    bool exact() const noexcept { return exact_; }
    std::size_t dim_k() const noexcept { return k_; }
    std::size_t size() const noexcept { return shapes_.size() * k_; }

    CVector coordinates(const WeightAtom& atom) const;
    Matrix form(const BoundaryWeight& mu) const;
    // Atom decomposition of a PSD form matrix; eigenvalues below rel_tol * max are dropped.
    BoundaryWeight weight(const Matrix& form, double rel_tol = 1e-12) const;

private:
    std::size_t shape_index(const Profile& p) const;

    std::size_t k_;
    std::vector<Profile> shapes_;
    bool exact_ = true;
};

struct DominationResult {
    bool holds = false;
    bool sampled_only = false;
    double min_eigenvalue = 0.0;
};

// Decides mu - c * nu >= 0. Exact through form matrices; grid-sampled profiles fall back to
// 64 random PSD observables at 6 truncations.
DominationResult dominates(const BoundaryWeight& mu, const BoundaryWeight& nu, double c,
                           std::uint64_t seed = 0xC0FFEE);

// mu - c * nu as a weight; throws NotDominated unless the difference is positive, and
// UnsupportedWeightComparison for grid-sampled profiles.
BoundaryWeight weight_difference(const BoundaryWeight& mu, const BoundaryWeight& nu, double c = 1.0);

bool weights_equal(const BoundaryWeight& mu, const BoundaryWeight& nu, double rel_tol = 1e-8);

// The factor s with nu = s * mu, if any.
std::optional<double> proportionality_factor(const BoundaryWeight& mu, const BoundaryWeight& nu,
                                             double rel_tol = 1e-8);

}  // namespace qw
