#pragma once

#include <optional>
#include <vector>

#include "qw/qweight.hpp"

namespace qw {

enum class Verdict { QPure, NotQPure, Undecided };
enum class FailedCondition { None, TNotProjection, MuNotQPure, DivergenceRankDeficient };

const char* to_string(Verdict v);
const char* to_string(FailedCondition c);

struct Certificate {
    double t = 0.0;
    CVector observable;  // negative direction of the reduced Choi matrix
    double min_eigenvalue = 0.0;
};

struct PurityVerdict {
    Verdict verdict = Verdict::Undecided;
    FailedCondition failed_condition = FailedCondition::None;
    std::optional<QWeightMap> witness;
    bool witness_subordinate = false;
    bool witness_proportional = false;
    std::vector<Certificate> certificates;
};

enum class Tristate { True, False, Unsupported };

// Every rank-one positive functional below mu is a multiple of mu: one independent atom,
// or no nonzero combination of the atoms is square integrable.
Tristate mu_qpure_test(const BoundaryWeight& mu);

// A bounded weight rho <= mu built from a square-integrable combination of the atoms of mu,
// or nullopt when there is none.
std::optional<BoundaryWeight> bounded_part(const BoundaryWeight& mu);

// RankOne{T, lambda (1 + rho(Lambda(T)))^{-1} (mu - rho)}.
QWeightMap build_subordinate_from_rho(const QWeightMap& qw, const BoundaryWeight& rho, double lambda);

// Whether eta = s * omega for some s >= 0.
bool proportional_maps(const QWeightMap& omega, const QWeightMap& eta, double rel_tol = 1e-8);

PurityVerdict classify_rank_one(const QWeightMap& qw, const TGrid& grid = {});

// Recovers (lambda, rho) from eta = lambda (1 + rho(Lambda(T)))^{-1} (omega - rho) when mu is unbounded,
// through the limit of (1 + eta|_t(Lambda(T))) / (1 + omega|_t(Lambda(T))).
struct SubordinateParameters {
    double lambda = 0.0;
    BoundaryWeight rho;
};
SubordinateParameters recover_subordinate_parameters(const QWeightMap& omega, const QWeightMap& eta);

struct RankTwoWitnessReport {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    bool eta_subordinate = false;
    bool nu_subordinate = false;
    bool incomparable = false;
    std::optional<Certificate> eta_not_below_nu;
    std::optional<Certificate> nu_not_below_eta;
};

struct RankTwoWitnesses {
    QWeightMap eta;
    QWeightMap nu;
    RankTwoWitnessReport report;
};

// eta(rho) = rho(e1)(mu1 - kappa1 mu2) and nu(rho) = rho(e2)(mu2 - kappa2 mu1).
RankTwoWitnesses rank_two_witnesses(const QWeightMap& qw, const TGrid& grid = {});

}  // namespace qw
