#pragma once

#include <limits>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "qw/matrix.hpp"

namespace qw {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// amplitude * x^power * e^{-decay x}, power > -1, decay > 0.
struct PowerExp {
    cplx amplitude = 1.0;
    double power = 0.0;
    double decay = 1.0;
};

// amplitude * e^{-x/2} / sqrt(1 - e^{-x}); the Powers weight profile.
struct Canonical {
    cplx amplitude = 1.0;
};

// Piecewise linear through (knots, values), zero outside [knots.front(), knots.back()].
struct GridSampled {
    std::vector<double> knots;
    std::vector<cplx> values;
};

using Profile = std::variant<PowerExp, Canonical, GridSampled>;

Profile scaled(const Profile& g, cplx factor);
cplx profile_value(const Profile& g, double x);
bool same_shape(const Profile& a, const Profile& b);
// Exponent q of the leading term x^q at 0 (0 for bounded profiles).
double leading_exponent(const Profile& g);
// Coefficient of x^q at 0.
cplx leading_coefficient(const Profile& g);

enum class Kernel { One, ExpNeg, OneMinusExp };

struct Window {
    double lower = 0.0;
    double upper = kInfinity;
};

struct PairValue {
    bool infinite = false;
    cplx value = 0.0;
};

// Integral of conj(g1) g2 w over the window; PlusInfinity for diverging diagonal pairings.
PairValue pair_integral(const Profile& g1, const Profile& g2, Kernel kernel, Window window);

// Term g(x) * v of a weight atom; the vector is not normalized.
struct Component {
    Profile profile;
    CVector vector;
};

// h(x) = sum_c g_c(x) v_c. Single-component atoms carry a unit vector.
class WeightAtom {
public:
    WeightAtom() = default;
    // Normalizes v and absorbs its length into the amplitude.
    WeightAtom(Profile profile, CVector v);
    static WeightAtom composite(std::vector<Component> components);

    const std::vector<Component>& components() const noexcept { return components_; }
    std::size_t dim() const noexcept { return dim_; }
    bool single() const noexcept { return components_.size() == 1; }
    CVector value(double x) const;
    WeightAtom transformed(const Matrix& u) const;
    WeightAtom scaled(cplx factor) const;

private:
    std::vector<Component> components_;
    std::size_t dim_ = 0;
};

struct WeightTerm {
    double lambda = 1.0;
    WeightAtom atom;
};

// mu(A) = sum_i lambda_i <h_i, A h_i>.
class BoundaryWeight {
public:
    BoundaryWeight() = default;
    explicit BoundaryWeight(std::size_t dim_k, std::vector<WeightTerm> terms = {});

    std::size_t dim() const noexcept { return dim_; }
    const std::vector<WeightTerm>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }
    void add(double lambda, WeightAtom atom);

    BoundaryWeight scaled(double c) const;
    BoundaryWeight transformed(const Matrix& u) const;
    friend BoundaryWeight operator+(const BoundaryWeight& a, const BoundaryWeight& b);

private:
    std::size_t dim_ = 0;
    std::vector<WeightTerm> terms_;
};

// The Powers weight over C^1: a single canonical atom with lambda = 1.
BoundaryWeight canonical_weight();

struct OperatorTerm {
    Matrix op;
    Kernel kernel = Kernel::One;
};

class StructuredObservable {
public:
    enum class Kind { Id, Lambda, OpTensorId, IdMinusLambda };

    static StructuredObservable id(std::size_t k, Window w = {});
    static StructuredObservable lambda(Matrix t, Window w = {});
    static StructuredObservable op_tensor_id(Matrix m, Window w = {});
    static StructuredObservable id_minus_lambda(Matrix t, Window w = {});

    Kind kind() const noexcept { return kind_; }
    const Matrix& op() const noexcept { return op_; }
    Window window() const noexcept { return window_; }
    StructuredObservable with_window(Window w) const;
    // Sum of M (x) w(x) terms representing the observable.
    std::vector<OperatorTerm> lowered() const;

private:
    StructuredObservable(Kind kind, Matrix op, Window w);

    Kind kind_ = Kind::Id;
    Matrix op_;
    Window window_;
};

struct ExtendedReal {
    bool infinite = false;
    double value = 0.0;

    static ExtendedReal finite(double v) { return {false, v}; }
    static ExtendedReal plus_infinity() { return {true, kInfinity}; }
    ExtendedReal& operator+=(const ExtendedReal& o);
};

// <bra, (M (x) w) ket> over the window. Divergent pairings return PlusInfinity when the
// integrand is pointwise non-negative and throw DivergentCross otherwise.
PairValue pair_atoms(const WeightAtom& bra, const WeightAtom& ket, const Matrix& m, Kernel kernel, Window window,
                     bool diagonal = false);

// k x k matrix D with <bra, (M (x) w) ket>_window = tr(M D); the window must keep away from 0
// or involve no divergent component pairings.
Matrix atom_density(const WeightAtom& bra, const WeightAtom& ket, Kernel kernel, Window window);

ExtendedReal weight_eval(const BoundaryWeight& mu, const StructuredObservable& obs);
// Finite complex value of mu on a sum of operator terms; throws when divergent.
cplx weight_value(const BoundaryWeight& mu, const std::vector<OperatorTerm>& terms, Window window);

// sum_k lambda_k <bra_k, A ket_k>.
cplx pair_eval(const std::vector<WeightTerm>& bra, const std::vector<WeightAtom>& ket, const StructuredObservable& obs);

bool is_unbounded(const BoundaryWeight& mu);

enum class HMembership { InH, InHqOnly };
HMembership h_membership(const Profile& g);
HMembership h_membership(const WeightAtom& atom);

struct CombinationResult {
    bool exists = false;
    CVector coefficients;  // indexes the input atoms
};

// Decides whether a nonzero combination sum c_i h_i is square integrable.
CombinationResult combination_in_H(const std::vector<WeightAtom>& atoms);

// True iff mu(Lambda(u u*)) diverges for every unit u in range(T).
bool divergent_direction_rank(const BoundaryWeight& mu, const Matrix& t);

// Singular coefficient vectors of every atom; mu(Lambda(u u*)) = inf iff u meets one of them.
std::vector<CVector> divergent_vectors(const BoundaryWeight& mu);

// Small-t behaviour sum_{beta, j} c * t^{-beta} * ln(1/t)^j + constant.
class GrowthPoly {
public:
    struct Key {
        double beta = 0.0;
        int log_power = 0;
        auto operator<=>(const Key&) const = default;
    };

    GrowthPoly() = default;
    explicit GrowthPoly(cplx constant) : constant_(constant) {}

    void add(Key key, cplx coefficient, double mass);
    void add_constant(cplx c) { constant_ += c; }
    cplx constant() const noexcept { return constant_; }
    cplx divergent_part(double t) const;
    cplx operator()(double t) const { return divergent_part(t) + constant_; }
    // Value of the expansion at t = e^{-ell}, usable far below the double range of t.
    cplx at_log(double ell) const;
    double max_power() const;  // largest beta among the surviving terms, 0 if none
    bool bounded(double rel_tol = 1e-9) const;
    // Leading monomial with a coefficient that survives cancellation.
    std::optional<std::pair<Key, cplx>> leading(double rel_tol = 1e-9) const;
    const std::map<Key, std::pair<cplx, double>>& terms() const noexcept { return terms_; }

    GrowthPoly& operator+=(const GrowthPoly& o);
    GrowthPoly& operator*=(cplx s);
    friend GrowthPoly operator+(GrowthPoly a, const GrowthPoly& b) { return a += b; }
    friend GrowthPoly operator*(cplx s, GrowthPoly a) { return a *= s; }

private:
    std::map<Key, std::pair<cplx, double>> terms_;  // coefficient and absolute mass
    cplx constant_ = 0.0;
};

// Small-t expansion of <bra, (M (x) w) ket> over [t, upper).
GrowthPoly pair_growth(const WeightAtom& bra, const WeightAtom& ket, const Matrix& m, Kernel kernel,
                       double upper = kInfinity);

// Limit of a(t) / b(t) as t -> 0+ from their expansions; nullopt when b vanishes identically.
std::optional<cplx> ratio_limit(const GrowthPoly& a, const GrowthPoly& b, double rel_tol = 1e-9);

}  // namespace qw
