#pragma once

#include <cstdint>
#include <vector>

#include "qw/cp_map.hpp"
#include "qw/qweight.hpp"

namespace qw {

struct AxiomFlags {
    bool cp = false;
    bool fixes_range = false;
    bool range_equality = false;
    bool idempotent_norm_one = false;
    double fix_residual = 0.0;  // largest |L(breve(A)) - breve(A)| over the probes
    std::size_t range_rank = 0;  // rank of span{breve(A)}
    std::size_t l_rank = 0;

    bool all() const noexcept { return cp && fixes_range && range_equality && idempotent_norm_one; }
};

struct ExpectationResult {
    CPMap l;
    bool converged = false;
    double limit_spread = 0.0;  // extrapolation disagreement of the limit
    std::vector<CurvePoint> residual_curve;  // |(Pi_t o Lambda) - L|_F along the t-sequence
    AxiomFlags axioms;
};

// t_n = 10^{-n/2}, n = 0..14.
std::vector<double> default_t_sequence();

// Superoperator of Pi_t^# o Lambda = (I + X_t)^{-1} X_t on row-major vec(B).
Matrix truncated_expectation(const QWeightMap& qw, double t);

// Limit of Pi_t^# o Lambda as t -> 0+. The limit is evaluated from the small-t expansions of
// X_t and extrapolated in 1/ln(1/t); the t-sequence supplies the residual curve. Throws
// NotTrivialSpine when the normal spine is nontrivial. Without convergence (extrapolation spread
// above 1e-7) the last iterate of the sequence is returned with converged = false.
ExpectationResult boundary_expectation(const QWeightMap& qw, const std::vector<double>& ts = default_t_sequence(),
                                       std::uint64_t seed = 0xC0FFEE);

// breve(A) over the fixed probe family: Hermitian matrix units and 32 random Hermitian M, as
// M (x) (1 - e^{-x}) on [0, inf), M (x) e^{-x} on [t, inf) and M (x) 1 on [t, inf) for t in {0.1, 1}.
std::vector<Matrix> probe_images(const QWeightMap& qw, std::uint64_t seed = 0xC0FFEE);

AxiomFlags verify_axioms(const CPMap& l, const QWeightMap& qw, std::uint64_t seed = 0xC0FFEE, double tol = 1e-6);

struct StandardForm {
    Matrix e1;
    Matrix e2;
    BoundaryWeight mu1;
    BoundaryWeight mu2;
    CPMap l;
    double unit_defect = 0.0;  // |e1 + e2 - L(I)|
    bool box_condition = false;  // 0 <= x1 e1 + x2 e2 <= I iff x1, x2 in [0, 1] on a 21 x 21 grid
};

// Minimal central projections of the Choi-Effros algebra of L with the weights re-expressed
// against them. Throws RankMismatch unless the range has dimension two.
StandardForm standard_form_rank_two(const QWeightMap& qw);

struct TrichotomyResult {
    std::size_t rank = 0;
    bool consistent = false;      // rank in {1, 2, 4}
    bool q_pure_possible = false;  // rank in {1, 4}
};

TrichotomyResult range_rank_trichotomy(const QWeightMap& qw, std::uint64_t seed = 0xC0FFEE);

}  // namespace qw
