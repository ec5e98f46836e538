#include "qw/purity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qw/errors.hpp"
#include "qw/forms.hpp"

namespace qw {

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::QPure:
        return "QPure";
    case Verdict::NotQPure:
        return "NotQPure";
    case Verdict::Undecided:
        return "Undecided";
    }
    return "Undecided";
}

const char* to_string(FailedCondition c)
{
    switch (c) {
    case FailedCondition::None:
        return "none";
    case FailedCondition::TNotProjection:
        return "TNotProjection";
    case FailedCondition::MuNotQPure:
        return "MuNotQPure";
    case FailedCondition::DivergenceRankDeficient:
        return "DivergenceRankDeficient";
    }
    return "none";
}

namespace {

constexpr double kProjectionTol = 1e-9;

const RankOne& require_rank_one(const QWeightMap& qw)
{
    const auto* r = qw.rank_one();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, "operation needs a rank-one q-weight map");
    return *r;
}

// Atoms of mu re-expressed as linearly independent functions.
std::vector<WeightTerm> independent_terms(const BoundaryWeight& mu, ShapeDictionary& dict)
{
    dict.add(mu);
    return dict.weight(dict.form(mu), 1e-10).terms();
}

Matrix pseudo_inverse(const Matrix& h, double rel_tol)
{
    const auto es = hermitian_eigen(h);
    const double top = std::max(std::abs(es.values.front()), std::abs(es.values.back()));
    return hermitian_apply(h, [&](double x) { return std::abs(x) > rel_tol * top ? 1.0 / x : 0.0; });
}

Certificate certificate_from(const SubordinationResult& r)
{
    Certificate c;
    if (r.first_failure) {
        c.t = r.first_failure->t;
        c.observable = r.first_failure->witness;
        c.min_eigenvalue = r.first_failure->min_eigenvalue;
    }
    return c;
}

Matrix hermitian_part(const Matrix& m)
{
    return 0.5 * (m + m.adjoint());
}

}  // namespace

Tristate mu_qpure_test(const BoundaryWeight& mu)
{
    ShapeDictionary dict(mu.dim());
    if (!dict.add(mu))
        return Tristate::Unsupported;
    const auto terms = independent_terms(mu, dict);
    if (terms.size() <= 1)
        return Tristate::True;
    std::vector<WeightAtom> atoms;
    for (const auto& t : terms)
        atoms.push_back(t.atom);
    return combination_in_H(atoms).exists ? Tristate::False : Tristate::True;
}

std::optional<BoundaryWeight> bounded_part(const BoundaryWeight& mu)
{
    ShapeDictionary dict(mu.dim());
    if (!dict.add(mu))
        throw Error(ErrorKind::UnsupportedWeightComparison, "bounded part needs analytic profiles");
    const auto terms = independent_terms(mu, dict);
    std::vector<WeightAtom> atoms;
    for (const auto& t : terms)
        atoms.push_back(t.atom);
    const CombinationResult comb = combination_in_H(atoms);
    if (!comb.exists)
        return std::nullopt;
    std::vector<Component> comps;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (comb.coefficients[i] == cplx{})
            continue;
        const WeightAtom part = atoms[i].scaled(comb.coefficients[i]);
        for (const auto& c : part.components())
            comps.push_back(c);
    }
    const WeightAtom f = WeightAtom::composite(std::move(comps));
    const CVector y = dict.coordinates(f);
    const Matrix fm = dict.form(mu);
    const cplx q = inner(y, pseudo_inverse(fm, 1e-12) * y);
    BoundaryWeight rho(mu.dim());
    rho.add(0.5 / q.real(), f);
    return rho;
}

QWeightMap build_subordinate_from_rho(const QWeightMap& qw, const BoundaryWeight& rho, double lambda)
{
    const RankOne& r = require_rank_one(qw);
    if (lambda < 0.0 || lambda > 1.0)
        throw Error(ErrorKind::PreconditionViolated, "lambda must lie in [0, 1]");
    if (is_unbounded(rho))
        throw Error(ErrorKind::PreconditionViolated, "rho must be bounded");
    const BoundaryWeight diff = rho.empty() ? r.mu : weight_difference(r.mu, rho);
    const double rho_lambda = rho.empty() ? 0.0 : weight_eval(rho, StructuredObservable::lambda(r.t)).value;
    return RankOne{r.t, diff.scaled(lambda / (1.0 + rho_lambda))};
}

bool proportional_maps(const QWeightMap& omega, const QWeightMap& eta, double rel_tol)
{
    if (omega.dim() != eta.dim())
        return false;
    const auto* a = omega.rank_one();
    const auto* b = eta.rank_one();
    if (a && b) {
        if (b->mu.empty())
            return true;
        if (max_abs_diff(a->t, b->t) > rel_tol)
            return false;
        return proportionality_factor(a->mu, b->mu, rel_tol).has_value();
    }
    // Compare the dualized maps on random bounded observables.
    const FiniteForm fa = finite_form(omega);
    const FiniteForm fb = finite_form(eta);
    std::mt19937_64 rng(0xC0FFEE);
    std::normal_distribution<double> normal;
    std::vector<Matrix> va;
    std::vector<Matrix> vb;
    for (int n = 0; n < 16; ++n) {
        Matrix m(omega.dim(), omega.dim());
        for (auto& x : m.data())
            x = cplx(normal(rng), normal(rng));
        m = hermitian_part(m);
        const Window w{n % 2 == 0 ? 0.5 : 2.0, kInfinity};
        const Kernel k = n % 4 < 2 ? Kernel::One : Kernel::ExpNeg;
        va.push_back(dualized(fa, {{m, k}}, w));
        vb.push_back(dualized(fb, {{m, k}}, w));
    }
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        num += hs_inner(va[i], vb[i]);
        den += hs_inner(va[i], va[i]).real();
    }
    if (den == 0.0)
        return false;
    const cplx s = num / den;
    double scale = 0.0;
    double resid = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        resid = std::max(resid, (vb[i] - s * va[i]).frobenius());
        scale = std::max(scale, vb[i].frobenius());
    }
    return resid <= rel_tol * std::max(scale, 1e-300) && s.real() >= -rel_tol;
}

PurityVerdict classify_rank_one(const QWeightMap& qw, const TGrid& grid)
{
    const RankOne& r = require_rank_one(qw);
    PurityVerdict out;
    const std::size_t k = r.t.rows();
    const auto es = hermitian_eigen(r.t);

    const bool projection = std::all_of(es.values.begin(), es.values.end(), [](double s) {
        return std::abs(s) <= kProjectionTol || std::abs(s - 1.0) <= kProjectionTol;
    });
    if (!projection) {
        // s0 at the midpoint of the widest gap between consecutive positive eigenvalues.
        std::vector<double> spec;
        for (double s : es.values)
            if (s > kProjectionTol && (spec.empty() || s - spec.back() > kProjectionTol))
                spec.push_back(s);
        double s0 = 1.0;
        double gap = -1.0;
        for (std::size_t i = 0; i + 1 < spec.size(); ++i)
            if (spec[i + 1] - spec[i] > gap) {
                gap = spec[i + 1] - spec[i];
                s0 = 0.5 * (spec[i] + spec[i + 1]);
            }
        Matrix f(k, k);
        for (std::size_t j = 0; j < k; ++j)
            if (es.values[j] >= s0) {
                const CVector v = es.vectors.col(j);
                f += Matrix::outer(v, v);
            }
        const Matrix t1 = hermitian_part(f * r.t);
        const ExtendedReal rest = weight_eval(r.mu, StructuredObservable::lambda(r.t - t1));
        const double lambda = rest.infinite ? 0.0 : 1.0 / (1.0 + rest.value);
        out.verdict = Verdict::NotQPure;
        out.failed_condition = FailedCondition::TNotProjection;
        out.witness = QWeightMap(RankOne{t1, r.mu.scaled(lambda)});
    } else {
        const Tristate mu_pure = mu_qpure_test(r.mu);
        if (mu_pure == Tristate::Unsupported)
            return out;
        if (mu_pure == Tristate::False) {
            const auto rho = bounded_part(r.mu);
            if (!rho)
                return out;
            out.verdict = Verdict::NotQPure;
            out.failed_condition = FailedCondition::MuNotQPure;
            out.witness = build_subordinate_from_rho(qw, *rho, 1.0);
        } else if (numerical_rank(r.t, default_tol.range) >= 2 && !divergent_direction_rank(r.mu, r.t)) {
            // e projects onto the directions of range(T) that avoid every divergent vector.
            const auto vecs = divergent_vectors(r.mu);
            Matrix e;
            if (vecs.empty()) {
                const Matrix basis = orthonormal_range(r.t, default_tol.range);
                const CVector u = basis.col(0);
                e = Matrix::outer(u, u);
            } else {
                Matrix cols(k, vecs.size());
                for (std::size_t j = 0; j < vecs.size(); ++j)
                    cols.set_col(j, r.t * vecs[j]);
                const Matrix d = orthonormal_range(cols, default_tol.range);
                e = r.t - d * d.adjoint();
            }
            e = hermitian_part(e);
            const double lambda = 1.0 / (1.0 + weight_eval(r.mu, StructuredObservable::lambda(e)).value);
            out.verdict = Verdict::NotQPure;
            out.failed_condition = FailedCondition::DivergenceRankDeficient;
            out.witness = QWeightMap(RankOne{hermitian_part(r.t - e), r.mu.scaled(lambda)});
        } else {
            out.verdict = Verdict::QPure;
            return out;
        }
    }
    const SubordinationResult sub = subordination_check(qw, *out.witness, grid);
    out.witness_subordinate = sub.holds;
    if (!sub.holds)
        out.certificates.push_back(certificate_from(sub));
    out.witness_proportional = proportional_maps(qw, *out.witness);
    return out;
}

SubordinateParameters recover_subordinate_parameters(const QWeightMap& omega, const QWeightMap& eta)
{
    const RankOne& a = require_rank_one(omega);
    const RankOne& b = require_rank_one(eta);
    if (!is_unbounded(a.mu))
        throw Error(ErrorKind::PreconditionViolated, "parameter recovery needs an unbounded weight");
    GrowthPoly ga(1.0);
    GrowthPoly gb(1.0);
    for (const auto& term : a.mu.terms())
        ga += term.lambda * pair_growth(term.atom, term.atom, a.t, Kernel::ExpNeg);
    for (const auto& term : b.mu.terms())
        gb += term.lambda * pair_growth(term.atom, term.atom, a.t, Kernel::ExpNeg);
    const auto c = ratio_limit(gb, ga);
    if (!c || !(c->real() > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "eta is not of subordinate form");
    SubordinateParameters p;
    p.rho = weight_difference(a.mu, b.mu, 1.0 / c->real());
    const double rho_lambda = p.rho.empty() ? 0.0 : weight_eval(p.rho, StructuredObservable::lambda(a.t)).value;
    p.lambda = c->real() * (1.0 + rho_lambda);
    return p;
}

RankTwoWitnesses rank_two_witnesses(const QWeightMap& qw, const TGrid& grid)
{
    const auto* r = qw.rank_two();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, "rank_two_witnesses needs a rank-two map");
    if (r->mu1.empty() || r->mu2.empty())
        throw Error(ErrorKind::PreconditionViolated, "both weights must be nonzero");
    if (weights_equal(r->mu1, r->mu2))
        throw Error(ErrorKind::PreconditionViolated, "witnesses need mu1 != mu2");
    const RankTwoReport rep = validate_rank_two(qw, grid);
    if (!rep.valid)
        throw Error(ErrorKind::PreconditionViolated, "rank-two map is not a valid q-weight map");
    if (rep.kappa1 >= 1.0 - 1e-9 || rep.kappa2 >= 1.0 - 1e-9)
        throw Error(ErrorKind::PreconditionViolated, "witnesses need kappa1, kappa2 < 1");

    RankTwoWitnesses w{QWeightMap(RankOne{r->e1, weight_difference(r->mu1, r->mu2, rep.kappa1)}),
                       QWeightMap(RankOne{r->e2, weight_difference(r->mu2, r->mu1, rep.kappa2)}),
                       {}};
    w.report.kappa1 = rep.kappa1;
    w.report.kappa2 = rep.kappa2;
    w.report.eta_subordinate = subordination_check(qw, w.eta, grid).holds;
    w.report.nu_subordinate = subordination_check(qw, w.nu, grid).holds;
    const SubordinationResult eta_nu = subordination_check(w.nu, w.eta, grid);
    const SubordinationResult nu_eta = subordination_check(w.eta, w.nu, grid);
    if (!eta_nu.holds)
        w.report.eta_not_below_nu = certificate_from(eta_nu);
    if (!nu_eta.holds)
        w.report.nu_not_below_eta = certificate_from(nu_eta);
    w.report.incomparable = !eta_nu.holds && !nu_eta.holds;
    return w;
}

}  // namespace qw
