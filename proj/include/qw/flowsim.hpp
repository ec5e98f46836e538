#pragma once

#include <string>
#include <vector>

#include "qw/qweight.hpp"

namespace qw {

// C^k (x) L^2(0, horizon) sampled at the midpoints x_j = (j + 1/2) step of m cells.
// Vectors and matrices use the index j * k + a.
class DiscretizedH {
public:
    DiscretizedH(std::size_t k, std::size_t m, double horizon = 20.0);

    std::size_t k() const noexcept { return k_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t size() const noexcept { return k_ * m_; }
    double horizon() const noexcept { return horizon_; }
    double step() const noexcept { return horizon_ / static_cast<double>(m_); }
    double point(std::size_t j) const { return (static_cast<double>(j) + 0.5) * step(); }

    // One-step right shift; zeros enter at the boundary.
    Matrix shift() const;
    Matrix lambda() const;
    // E(t, inf) for t a multiple of the step.
    Matrix tail_projection(double t) const;
    // Atom samples h(x_j) sqrt(step).
    CVector sample(const WeightAtom& atom) const;

private:
    std::size_t k_;
    std::size_t m_;
    double horizon_;
};

// Operators diagonal in position: one k x k block per grid point.
using BlockDiagonal = std::vector<Matrix>;

// M (x) w restricted to the observable's window and to [from, inf).
BlockDiagonal discretize(const DiscretizedH& h, const StructuredObservable& obs, double from = 0.0);

// sum_j e^{-j step} step S^j A S*^j.
Matrix gamma_disc(const DiscretizedH& h, const Matrix& a);
BlockDiagonal gamma_disc(const DiscretizedH& h, const BlockDiagonal& a);

// Density R with R^(A) = tr(R A) for the resolvent Gamma^(omega(Lambda^ eta) + eta), eta a density
// on the discretized space.
Matrix resolvent_from_weight(const DiscretizedH& h, const QWeightMap& qw, const Matrix& eta);

// omega(rho) on a block-diagonal operator, with the atoms sampled on the grid.
cplx discretized_weight(const DiscretizedH& h, const QWeightMap& qw, const Matrix& rho, const BlockDiagonal& b);

// Densities eta with Lambda^(eta) = rho.
enum class Pullback { Concentrated, Spread };
std::vector<Matrix> pullback_blocks(const DiscretizedH& h, const Matrix& rho, Pullback kind);

struct Recovery {
    std::string observable;
    double direct = 0.0;     // omega(rho)(T) on [x, inf), continuum
    double recovered = 0.0;  // finite-difference recovery from the resolvent
    double rel_err = 0.0;
};

// Recovers omega(rho)(T restricted to [x, inf)) as (1/step) (R^(eta) - Gamma^(eta))(T - e^{-step} S T S*),
// with eta a pullback of rho. x must be a grid multiple.
Recovery recover_omega(const DiscretizedH& h, const QWeightMap& qw, const Matrix& rho, double x,
                       const StructuredObservable& obs, Pullback pullback = Pullback::Concentrated);

// Atoms whose exponential decay is slower than 0.2, for which the horizon truncation is not negligible.
std::vector<std::string> horizon_warnings(const QWeightMap& qw);

}  // namespace qw
