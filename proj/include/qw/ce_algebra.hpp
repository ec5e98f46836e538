#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qw/cp_map.hpp"

namespace qw {

// range(L) with the product x * y = L(xy).
class CEAlgebra {
public:
    explicit CEAlgebra(CPMap projection, double range_tol = default_tol.range);

    const CPMap& projection() const noexcept { return projection_; }
    const std::vector<Matrix>& basis() const noexcept { return basis_; }
    const Matrix& unit() const noexcept { return unit_; }
    std::size_t dim() const noexcept { return basis_.size(); }

    // c[a][b][c]: coefficient of basis c in basis a * basis b.
    cplx structure_constant(std::size_t a, std::size_t b, std::size_t c) const;

    bool contains(const Matrix& x, double tol = default_tol.range) const;
    CVector coordinates(const Matrix& x) const;
    Matrix element(std::span<const cplx> coords) const;
    Matrix product(const Matrix& x, const Matrix& y) const;

private:
    CPMap projection_;
    std::vector<Matrix> basis_;
    Matrix unit_;
    std::vector<cplx> constants_;
};

Matrix choi_effros_product(const CPMap& l, const Matrix& x, const Matrix& y);

// Minimal central projections, summing to the unit. Fixed seed for the random central element.
std::vector<Matrix> minimal_central_projections(const CEAlgebra& alg, std::uint64_t seed = 0xC0FFEE);

// e11, e12, e21, e22.
using MatrixUnits = std::array<Matrix, 4>;

// Returns std::nullopt when the off-diagonal corner L_12 vanishes.
std::optional<MatrixUnits> extract_matrix_units(const CPMap& l, const BlockStructure& blocks);

// Largest deviation from e_ij * e_kl = d_jk e_il, e_ij = e_ji^*, e11 + e22 = L(I).
double matrix_unit_defect(const CPMap& l, const MatrixUnits& units);

}  // namespace qw
