#include "qw/corners.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "qw/errors.hpp"
#include "qw/forms.hpp"
#include "qw/limits.hpp"
#include "qw/purity.hpp"

namespace qw {

namespace {

const RankOne& require_rank_one(const QWeightMap& qw, const char* role)
{
    const auto* r = qw.rank_one();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, std::string(role) + " must have range rank one");
    return *r;
}

Matrix block_embedding(std::size_t total, std::size_t offset, std::size_t k)
{
    Matrix j(total, k);
    for (std::size_t i = 0; i < k; ++i)
        j(offset + i, i) = 1.0;
    return j;
}

// Sums components of equal shape; nullopt when the atom vanishes identically.
std::optional<WeightAtom> merged(const std::vector<Component>& parts)
{
    std::vector<Component> out;
    for (const auto& c : parts) {
        const cplx amp = leading_coefficient(c.profile);
        if (amp == cplx{}) {
            out.push_back(c);
            continue;
        }
        const Profile unit = scaled(c.profile, 1.0 / amp);
        auto it = std::find_if(out.begin(), out.end(), [&](const Component& o) {
            return leading_coefficient(o.profile) != cplx{} && same_shape(o.profile, unit);
        });
        if (it == out.end()) {
            out.push_back({unit, CVector(c.vector.size())});
            it = std::prev(out.end());
        }
        for (std::size_t i = 0; i < c.vector.size(); ++i)
            it->vector[i] += amp * c.vector[i];
    }
    double mass = 0.0;
    for (const auto& c : parts)
        mass = std::max(mass, std::abs(leading_coefficient(c.profile)) * norm2(c.vector));
    std::erase_if(out, [&](const Component& c) {
        return leading_coefficient(c.profile) != cplx{} && norm2(c.vector) <= 1e-13 * std::max(mass, 1e-300);
    });
    if (out.empty())
        return std::nullopt;
    return WeightAtom::composite(std::move(out));
}

// Expansion data of the three scalar functions entering h(t).
struct HData {
    GrowthPoly a;
    GrowthPoly b;
    GrowthPoly c;
};

GrowthPoly lambda_growth(const BoundaryWeight& mu, const Matrix& t)
{
    GrowthPoly g;
    for (const auto& term : mu.terms())
        g += cplx(term.lambda) * pair_growth(term.atom, term.atom, t, Kernel::ExpNeg);
    return g;
}

struct CornerGeometry {
    Matrix j1;
    Matrix j2;
    Matrix q;  // embedded Q
};

CornerGeometry geometry(const CornerData& corner)
{
    const std::size_t k1 = corner.q.rows();
    const std::size_t k2 = corner.q.cols();
    CornerGeometry g{block_embedding(k1 + k2, 0, k1), block_embedding(k1 + k2, k1, k2), {}};
    g.q = g.j1 * corner.q * g.j2.adjoint();
    return g;
}

cplx corner_pairing(const CornerData& corner, const CornerGeometry& geo, Window w)
{
    cplx v = 0.0;
    for (std::size_t k = 0; k < corner.bra.size(); ++k)
        v += corner.bra[k].lambda
             * pair_atoms(corner.bra[k].atom.transformed(geo.j1), corner.ket[k].transformed(geo.j2), geo.q,
                          Kernel::ExpNeg, w)
                   .value;
    return corner.scale * v;
}

GrowthPoly corner_growth(const CornerData& corner, const CornerGeometry& geo)
{
    GrowthPoly g;
    for (std::size_t k = 0; k < corner.bra.size(); ++k)
        g += cplx(corner.bra[k].lambda)
             * pair_growth(corner.bra[k].atom.transformed(geo.j1), corner.ket[k].transformed(geo.j2), geo.q,
                           Kernel::ExpNeg);
    return corner.scale * g;
}

double h_value(double a, double b, cplx c)
{
    const double den = std::abs(1.0 + c);
    if (den < 1e-12)
        throw Error(ErrorKind::IllDefinedH, "1 + tau|_t(Lambda(Q)) vanishes");
    return std::sqrt((1.0 + a) * (1.0 + b)) / den;
}

}  // namespace

CornerCandidate corner_candidate(const QWeightMap& omega, const QWeightMap& eta, const Matrix& u, double z)
{
    const RankOne& w = require_rank_one(omega, "omega");
    const RankOne& e = require_rank_one(eta, "eta");
    const std::size_t k = w.t.rows();
    if (e.t.rows() != k || u.rows() != k || u.cols() != k)
        throw Error(ErrorKind::DimensionMismatch, "corner alignment needs equal dimensions and a square U");
    if (max_abs_diff(u.adjoint() * u, Matrix::identity(k)) > 1e-9)
        throw Error(ErrorKind::PreconditionViolated, "U must be unitary");
    if (!(z > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "z must be positive");
    if (max_abs_diff(u * w.t * u.adjoint(), e.t) > 1e-8)
        throw Error(ErrorKind::Misaligned, "U T1 U* differs from T2");
    const auto& fs = w.mu.terms();
    const auto& gs = e.mu.terms();
    if (fs.size() != gs.size())
        throw Error(ErrorKind::Misaligned, "omega and eta must have the same number of atoms");

    const Matrix range2 = orthonormal_range(e.t, 1e-9);
    const Matrix off_range = Matrix::identity(k) - range2 * range2.adjoint();

    CornerCandidate out;
    out.u = u;
    out.z = z;
    out.corner.q = w.t * u.adjoint();
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const double sf = std::sqrt(fs[i].lambda);
        const double sg = std::sqrt(gs[i].lambda);
        std::vector<Component> parts;
        for (const auto& c : gs[i].atom.components())
            parts.push_back({scaled(c.profile, sg), c.vector});
        const WeightAtom moved = fs[i].atom.transformed(u);
        for (const auto& c : moved.components())
            parts.push_back({scaled(c.profile, -z * sf), c.vector});
        if (auto h = merged(parts)) {
            if (h_membership(*h) != HMembership::InH)
                throw Error(ErrorKind::NotSquareSummable, "residual atom " + std::to_string(i) + " is not square integrable");
            for (const auto& c : h->components())
                if (norm2(off_range * c.vector) > 1e-9 * std::max(1.0, norm2(c.vector)))
                    throw Error(ErrorKind::Misaligned, "residual atom leaves the range of T2");
            out.r += pair_atoms(*h, *h, Matrix::identity(k), Kernel::ExpNeg, {}).value.real();
            out.residuals.push_back(std::move(*h));
        } else {
            // Vanishing residual, kept as a zero atom so the lists stay aligned.
            out.residuals.push_back(WeightAtom(PowerExp{0.0, 0.0, 1.0}, CVector(k, 1.0)));
        }
        out.corner.bra.push_back({sf * sg, fs[i].atom});
        out.corner.ket.push_back(gs[i].atom);
    }
    out.lambda = 2.0 * z / (1.0 + z * z + out.r);
    out.corner.scale = out.lambda;
    return out;
}

std::optional<Alignment> align_weights(const QWeightMap& omega, const QWeightMap& eta)
{
    const RankOne& w = require_rank_one(omega, "omega");
    const RankOne& e = require_rank_one(eta, "eta");
    const std::size_t k = w.t.rows();
    if (e.t.rows() != k || w.mu.terms().size() != e.mu.terms().size() || w.mu.empty())
        return std::nullopt;
    // Leading vectors of the atoms, restricted to the singular ones when there are any.
    const auto columns = [&](const BoundaryWeight& mu, bool singular_only) {
        std::vector<CVector> cols;
        for (const auto& term : mu.terms()) {
            const auto& c = term.atom.components().front();
            if (singular_only && leading_exponent(c.profile) > -0.5)
                continue;
            CVector v = c.vector;
            const cplx s = std::sqrt(term.lambda) * leading_coefficient(c.profile);
            for (auto& x : v)
                x *= s;
            cols.push_back(std::move(v));
        }
        return cols;
    };
    const bool singular = is_unbounded(w.mu) && is_unbounded(e.mu);
    const auto vw = columns(w.mu, singular);
    const auto ve = columns(e.mu, singular);
    if (vw.size() != ve.size() || vw.empty())
        return std::nullopt;
    Matrix m(k, k);
    double nw = 0.0;
    double ne = 0.0;
    for (std::size_t c = 0; c < vw.size(); ++c) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                m(i, j) += ve[c][i] * std::conj(vw[c][j]);
        nw += norm2(vw[c]) * norm2(vw[c]);
        ne += norm2(ve[c]) * norm2(ve[c]);
    }
    const Matrix mm = m.adjoint() * m;
    if (min_eigenvalue(mm) <= 1e-12 * std::max(1.0, mm.norm()))
        return std::nullopt;
    const Matrix u = m * hermitian_apply(mm, [](double x) { return 1.0 / std::sqrt(x); });
    if (max_abs_diff(u * w.t * u.adjoint(), e.t) > 1e-8)
        return std::nullopt;
    return Alignment{u, std::sqrt(ne / nw)};
}

HCurve h_curve(const QWeightMap& omega, const QWeightMap& eta, const CornerData& corner, const TGrid& grid)
{
    const RankOne& w = require_rank_one(omega, "omega");
    const RankOne& e = require_rank_one(eta, "eta");
    const CornerGeometry geo = geometry(corner);
    HCurve out;
    for (const double t : grid.values()) {
        const Window win{t, kInfinity};
        const double a = weight_eval(w.mu, StructuredObservable::lambda(w.t, win)).value;
        const double b = weight_eval(e.mu, StructuredObservable::lambda(e.t, win)).value;
        out.values.push_back({t, h_value(a, b, corner_pairing(corner, geo, win))});
    }
    const HData d{lambda_growth(w.mu, w.t), lambda_growth(e.mu, e.t), corner_growth(corner, geo)};
    const double power = std::max({d.a.max_power(), d.b.max_power(), d.c.max_power()});
    const auto lim = log_scale_limit(
        [&](double ell) {
            return std::vector<cplx>{h_value(d.a.at_log(ell).real(), d.b.at_log(ell).real(), d.c.at_log(ell))};
        },
        power);
    out.kappa = lim.value.front().real();
    out.kappa_grid = out.values.front().value;
    out.kappa_error = std::abs(out.values[0].value - out.values[1].value);
    return out;
}

CornerReport verify_corner(const QWeightMap& omega, const QWeightMap& eta, const CornerData& corner,
                           const TGrid& grid)
{
    CornerReport rep;
    rep.h = h_curve(omega, eta, corner, grid);
    constexpr double tol = 1e-9;
    const double kappa = rep.h.kappa;
    rep.h_bounded = std::all_of(rep.h.values.begin(), rep.h.values.end(),
                                [&](const CurvePoint& p) { return p.value <= kappa + tol * std::max(1.0, kappa); });
    rep.h_monotone = true;
    for (std::size_t i = 0; i + 1 < rep.h.values.size(); ++i)
        rep.h_monotone = rep.h_monotone && rep.h.values[i].value >= rep.h.values[i + 1].value - tol;
    if (!rep.h_bounded)
        rep.reasons.push_back("|h(t)| exceeds its limit on the grid");

    CornerData limit = corner;
    limit.scale *= kappa;
    const FiniteForm psi = finite_form(QWeightMap::assembled(omega, eta, limit));
    rep.limit_min_eigenvalue = kInfinity;
    double top = 0.0;
    for (const double t : grid.values()) {
        const Matrix choi = truncated_choi(psi, t);
        if (choi.empty())
            continue;
        const auto es = hermitian_eigen(choi);
        rep.limit_min_eigenvalue = std::min(rep.limit_min_eigenvalue, es.values.front());
        top = std::max(top, std::abs(es.values.back()));
    }
    rep.limit_cp = !(rep.limit_min_eigenvalue < -tol * std::max(1.0, top));
    if (!rep.limit_cp)
        rep.reasons.push_back("limiting functional matrix [[mu, kappa tau], [kappa tau*, nu]] is not CP");
    rep.trivially_maximal =
        is_unbounded(require_rank_one(omega, "omega").mu) && is_unbounded(require_rank_one(eta, "eta").mu);
    rep.is_q_corner = rep.h_bounded && rep.limit_cp;
    return rep;
}

DeterminantPoint determinant_inequality(double a, cplx b, double z, double r, double lambda)
{
    DeterminantPoint p;
    p.a = a;
    p.b = b;
    p.lhs = lambda * lambda * (1.0 + a + a * z * z + 2.0 * z * b.real() + r + a * r - std::norm(b));
    p.rhs = 1.0 + 2.0 * lambda * (a * z + b.real());
    p.holds = p.lhs <= p.rhs + 1e-12 * std::max(1.0, std::abs(p.rhs));
    return p;
}

std::vector<DeterminantPoint> determinant_inequality_check(const QWeightMap& omega, const CornerCandidate& candidate,
                                                           double lambda, const TGrid& grid)
{
    const RankOne& w = require_rank_one(omega, "omega");
    const Matrix tu = w.t * candidate.u.adjoint();
    const double z = candidate.z;
    const double r = candidate.r;
    std::vector<DeterminantPoint> out;
    for (const double t : grid.values()) {
        const Window win{t, kInfinity};
        DeterminantPoint p;
        p.t = t;
        p.a = weight_eval(w.mu, StructuredObservable::lambda(w.t, win)).value;
        for (std::size_t k = 0; k < w.mu.terms().size(); ++k) {
            const auto& term = w.mu.terms()[k];
            p.b += std::sqrt(term.lambda)
                   * pair_atoms(term.atom, candidate.residuals[k], tu, Kernel::ExpNeg, win).value;
        }
        const cplx b = p.b;
        p = determinant_inequality(p.a, b, z, r, lambda);
        p.t = t;
        out.push_back(p);
    }
    return out;
}

QWeightMap assemble_theta(const QWeightMap& omega, const QWeightMap& eta, const std::optional<CornerData>& corner,
                          const TGrid& grid)
{
    if (corner) {
        const CornerReport rep = verify_corner(omega, eta, *corner, grid);
        if (!rep.is_q_corner)
            throw Error(ErrorKind::NotCP, "corner fails verification: " + rep.reasons.front());
    }
    return QWeightMap::assembled(omega, eta, corner);
}

FalsifyResult hypermaximal_falsify(const QWeightMap& theta, const TGrid& grid)
{
    const auto* a = theta.assembled_data();
    if (!a)
        throw Error(ErrorKind::PreconditionViolated, "hyper-maximality applies to assembled maps");
    const RankOne& w = require_rank_one(a->blocks[0], "first block");
    const RankOne& e = require_rank_one(a->blocks[1], "second block");

    struct Variant {
        BoundaryWeight mu;
        BoundaryWeight nu;
        std::string description;
    };
    std::vector<Variant> family;
    for (const double s : {0.5, 0.8, 0.95, 0.99}) {
        const std::string tag = std::to_string(s);
        family.push_back({w.mu.scaled(s), e.mu, "first block scaled by " + tag});
        family.push_back({w.mu, e.mu.scaled(s), "second block scaled by " + tag});
        family.push_back({w.mu.scaled(s), e.mu.scaled(s), "both blocks scaled by " + tag});
    }
    for (const double s : {1.0, 0.5}) {
        if (const auto rho = bounded_part(w.mu))
            family.push_back({weight_difference(w.mu, *rho, s), e.mu, "bounded part removed from the first block"});
        if (const auto rho = bounded_part(e.mu))
            family.push_back({w.mu, weight_difference(e.mu, *rho, s), "bounded part removed from the second block"});
    }

    FalsifyResult out;
    for (auto& v : family) {
        ++out.tried;
        if (v.mu.empty() && v.nu.empty())
            continue;
        const QWeightMap candidate =
            QWeightMap::assembled(RankOne{w.t, std::move(v.mu)}, RankOne{e.t, std::move(v.nu)}, a->corner);
        if (validate(candidate, grid).valid) {
            out.falsified = true;
            out.witness = candidate;
            out.description = v.description;
            return out;
        }
    }
    return out;
}

bool conjugacy_obstruction(std::size_t dim1, std::size_t dim2, bool spine1_trivial, bool spine2_trivial)
{
    if (!spine1_trivial || !spine2_trivial)
        throw Error(ErrorKind::PreconditionViolated, "the obstruction needs trivial normal spines");
    return dim1 != dim2;
}

}  // namespace qw
