#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qw/matrix.hpp"
#include "qw/weights.hpp"

namespace qw {

// Geometric grid of truncation points, ascending.
struct TGrid {
    double t_min = 1e-6;
    double t_max = 10.0;
    std::size_t points = 24;

    std::vector<double> values() const;
};

// omega(rho)(A) = rho(T) mu(A).
struct RankOne {
    Matrix t;
    BoundaryWeight mu;
};

// omega(rho)(A) = rho(e1) mu1(A) + rho(e2) mu2(A).
struct RankTwo {
    Matrix e1;
    Matrix e2;
    BoundaryWeight mu1;
    BoundaryWeight mu2;
};

// Off-diagonal block gamma(rho)(A) = scale * rho(Q) * sum_k lambda_k <f_k, A g_k>, with the
// bra atoms f_k over the first block and the ket atoms g_k over the second.
struct CornerData {
    Matrix q;
    std::vector<WeightTerm> bra;
    std::vector<WeightAtom> ket;
    double scale = 1.0;
};

class QWeightMap;

struct Assembled {
    std::vector<QWeightMap> blocks;  // two diagonal blocks
    std::optional<CornerData> corner;
};

class QWeightMap {
public:
    using Variant = std::variant<RankOne, RankTwo, Assembled>;

    QWeightMap(RankOne r);
    QWeightMap(RankTwo r);
    static QWeightMap assembled(QWeightMap first, QWeightMap second, std::optional<CornerData> corner = {});

    const Variant& data() const noexcept { return data_; }
    std::size_t dim() const;
    std::string kind_name() const;

    const RankOne* rank_one() const { return std::get_if<RankOne>(&data_); }
    const RankTwo* rank_two() const { return std::get_if<RankTwo>(&data_); }
    const Assembled* assembled_data() const { return std::get_if<Assembled>(&data_); }

private:
    explicit QWeightMap(Assembled a);
    Variant data_;
};

// The dualized map as sum over atom pairs: breve(A) = sum <phi_i, A phi_j> W_ij.
struct FiniteForm {
    struct Pair {
        std::size_t bra;
        std::size_t ket;
        Matrix target;
    };
    std::size_t dim = 0;
    std::vector<WeightAtom> atoms;
    std::vector<Pair> pairs;
};

FiniteForm finite_form(const QWeightMap& qw);

// The dualized map on a sum of operator terms over a window.
Matrix dualized(const FiniteForm& form, const std::vector<OperatorTerm>& terms, Window window = {});
Matrix dualized(const QWeightMap& qw, const StructuredObservable& obs);

// Generalized boundary representation at a truncation point t > 0:
// A -> sum_ij <phi_i, A|_t phi_j> C_ij with C_ij = (I + X)^{-1}(W_ij), X(B) = breve|_t(B (x) e^{-x}).
class GBRSample {
public:
    GBRSample(std::shared_ptr<const FiniteForm> form, double t);

    double t() const noexcept { return t_; }
    std::size_t dim() const noexcept { return form_->dim; }
    const FiniteForm& form() const noexcept { return *form_; }
    // Coefficient operators C_ij, aligned with form().pairs.
    const std::vector<Matrix>& coefficients() const noexcept { return coeffs_; }
    // Superoperator of B -> breve|_t(Lambda(B)) on row-major vec(B).
    const Matrix& x_map() const noexcept { return x_map_; }
    // Gram matrix <phi_i, phi_j>_t of the atoms.
    const Matrix& gram() const noexcept { return gram_; }

    Matrix apply(const std::vector<OperatorTerm>& terms, Window window = {}) const;
    Matrix apply(const StructuredObservable& obs) const;

    // Choi matrix of the sample compressed to the span of the truncated atoms.
    Matrix reduced_choi() const;
    bool is_cp(double tol = default_tol.psd) const;
    // Norm of pi(I); the map norm when the sample is CP.
    double norm() const;

private:
    std::shared_ptr<const FiniteForm> form_;
    double t_;
    Matrix gram_;
    Matrix x_map_;
    std::vector<Matrix> coeffs_;
};

GBRSample gbr(const QWeightMap& qw, double t);

// Choi matrix of A -> breve|_t(A), compressed like GBRSample::reduced_choi.
Matrix truncated_choi(const FiniteForm& form, double t);

// Scalar coefficient c(t) = 1 / (1 + mu|_t(Lambda(T))) of a rank-one map.
double rank_one_coefficient(const QWeightMap& qw, double t);

// The 2x2 system of a rank-two map at t: x_ij = mu_i|_t(Lambda(e_j)).
struct RankTwoSystem {
    double t = 0.0;
    double x[2][2] = {};
    double det = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    // (I + X)^{-1}: ell_i = sum_j inverse[i][j] * mu_j|_t.
    double inverse[2][2] = {};
};

// Throws SingularSystem when det(I + X(t)) vanishes.
RankTwoSystem rank_two_system(const QWeightMap& qw, double t);

struct QWeightReport {
    bool valid = false;
    bool unital = false;
    double normalization = 0.0;  // mu(I - Lambda(T)), infinite when unbounded
    std::vector<std::string> reasons;
};

QWeightReport validate_rank_one(const Matrix& t, const BoundaryWeight& mu, double tol = 1e-9);

struct CurvePoint {
    double t;
    double value;
};

struct RankTwoReport {
    bool valid = false;
    bool structural = false;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    // h_i(t_min) and its last grid increment, the grid-only lower estimate of kappa_i.
    double kappa1_grid = 0.0;
    double kappa2_grid = 0.0;
    double kappa1_error = 0.0;
    double kappa2_error = 0.0;
    std::vector<CurvePoint> h1_curve;
    std::vector<CurvePoint> h2_curve;
    std::vector<CurvePoint> det_curve;
    bool h_monotone = false;
    bool det_at_least_one = false;
    double x = 0.0;
    double y = 0.0;
    bool in_parallelogram = false;
    bool kappa_inequalities = false;
    bool sampled_only = false;
    std::vector<std::string> reasons;
};

RankTwoReport validate_rank_two(const QWeightMap& qw, const TGrid& grid = {}, double tol = 1e-9);

// Structural and normalization validity of any supported map, with reasons.
QWeightReport validate(const QWeightMap& qw, const TGrid& grid = {});

// Grid certification that every GBR sample is a CP contraction.
struct GridCertificate {
    bool holds = true;
    double max_norm = 0.0;
    double min_eigenvalue = 0.0;
    std::optional<double> first_failure;
};

GridCertificate certify_gbr(const QWeightMap& qw, const TGrid& grid = {}, double tol = 1e-9);

struct SubordinationFailure {
    double t = 0.0;
    double min_eigenvalue = 0.0;
    CVector witness;  // eigenvector of the reduced Choi matrix of the difference
};

struct SubordinationResult {
    bool holds = true;
    std::optional<SubordinationFailure> first_failure;
};

// eta <=_q omega on the grid: pi_t - xi_t completely positive at every grid point.
SubordinationResult subordination_check(const QWeightMap& omega, const QWeightMap& eta, const TGrid& grid = {},
                                        double tol = 1e-9);

struct SpineResult {
    bool trivial = false;
    bool analytic = false;             // decided from divergence data rather than the curve
    double cut = 1.0;                  // the window [cut, inf) probed by the evidence curve
    std::vector<CurvePoint> evidence;  // |pi_t(E(cut, inf))| along the grid
};

SpineResult normal_spine_trivial(const QWeightMap& qw, const TGrid& grid = {});

}  // namespace qw
