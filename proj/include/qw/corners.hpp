#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qw/qweight.hpp"

namespace qw {

// Corner built from aligned atom data g_k = z (U (x) I) f_k + h_k.
struct CornerCandidate {
    CornerData corner;           // Q = T1 U*, tau pairs f_k with g_k, scale = lambda
    Matrix u;
    double z = 1.0;
    double r = 0.0;              // sum_k <h_k, e^{-x} h_k>
    double lambda = 1.0;         // 2z / (1 + z^2 + r)
    std::vector<WeightAtom> residuals;  // h_k
};

// omega and eta are rank one with the same number of terms, paired in order. Throws Misaligned
// unless U T1 U* = T2, NotSquareSummable when a residual is not square integrable.
CornerCandidate corner_candidate(const QWeightMap& omega, const QWeightMap& eta, const Matrix& u, double z);

// Procrustes fit of U on the singular coefficient vectors, with z the ratio of their sizes.
struct Alignment {
    Matrix u;
    double z = 1.0;
};
std::optional<Alignment> align_weights(const QWeightMap& omega, const QWeightMap& eta);

struct HCurve {
    std::vector<CurvePoint> values;  // |h(t)| in ascending t
    double kappa = 1.0;              // limit of |h(t)| as t -> 0
    double kappa_grid = 1.0;         // |h(t_min)|
    double kappa_error = 0.0;        // last grid increment
};

// h(t) = sqrt((1 + mu|_t(Lambda(T1))) (1 + nu|_t(Lambda(T2)))) / (1 + gamma-pairing|_t(Lambda(Q))).
HCurve h_curve(const QWeightMap& omega, const QWeightMap& eta, const CornerData& corner, const TGrid& grid = {});

struct CornerReport {
    bool is_q_corner = false;
    bool h_bounded = false;       // |h(t)| <= kappa on the grid
    bool h_monotone = false;      // |h(t)| non-increasing in t
    bool limit_cp = false;        // [[mu, kappa tau], [kappa tau*, nu]] completely positive
    double limit_min_eigenvalue = 0.0;
    bool trivially_maximal = false;
    HCurve h;
    std::vector<std::string> reasons;
};

// Throws IllDefinedH when 1 + tau|_t(Lambda(Q)) vanishes on the grid.
CornerReport verify_corner(const QWeightMap& omega, const QWeightMap& eta, const CornerData& corner,
                           const TGrid& grid = {});

struct DeterminantPoint {
    double t = 0.0;
    double a = 0.0;  // mu|_t(Lambda(T1))
    cplx b = 0.0;    // sum_k <f_k, (T1 U* (x) e^{-x}) h_k> over [t, inf)
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// lambda^2 (1 + a + a z^2 + 2z Re b + r + a r - |b|^2) <= 1 + 2 lambda (a z + Re b).
DeterminantPoint determinant_inequality(double a, cplx b, double z, double r, double lambda);

// The determinant inequality at each grid point.
std::vector<DeterminantPoint> determinant_inequality_check(const QWeightMap& omega, const CornerCandidate& candidate,
                                                           double lambda, const TGrid& grid = {});

// The map [[omega, gamma], [gamma*, eta]] over K1 (+) K2; throws NotCP when the corner fails verification.
QWeightMap assemble_theta(const QWeightMap& omega, const QWeightMap& eta, const std::optional<CornerData>& corner,
                          const TGrid& grid = {});

struct FalsifyResult {
    bool falsified = false;
    std::optional<QWeightMap> witness;
    std::string description;
    std::size_t tried = 0;
};

// Shrinks the diagonal blocks of an assembled map (scalings and bounded-part subtractions) with the
// corner held fixed; falsified when a strictly smaller diagonal still gives a valid map on the grid.
FalsifyResult hypermaximal_falsify(const QWeightMap& theta, const TGrid& grid = {});

// Unital q-pure rank-one maps with trivial spines over spaces of different dimension induce
// semigroups that are not cocycle conjugate.
bool conjugacy_obstruction(std::size_t dim1, std::size_t dim2, bool spine1_trivial, bool spine2_trivial);

}  // namespace qw
