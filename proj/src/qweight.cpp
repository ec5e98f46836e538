#include "qw/qweight.hpp"

#include <algorithm>
#include <cmath>

#include "qw/errors.hpp"
#include "qw/forms.hpp"

namespace qw {

std::vector<double> TGrid::values() const
{
    if (!(t_min > 0.0) || !(t_min < t_max) || points < 8)
        throw Error(ErrorKind::PreconditionViolated, "grid needs 0 < t_min < t_max and at least 8 points");
    std::vector<double> out(points);
    const double ratio = std::log(t_max / t_min);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = t_min * std::exp(ratio * static_cast<double>(i) / static_cast<double>(points - 1));
    out.back() = t_max;
    return out;
}

QWeightMap::QWeightMap(RankOne r) : data_(std::move(r))
{
    const auto& d = std::get<RankOne>(data_);
    if (!d.t.square() || d.t.rows() != d.mu.dim())
        throw Error(ErrorKind::DimensionMismatch, "rank-one map: T and mu dimensions differ");
}

QWeightMap::QWeightMap(RankTwo r) : data_(std::move(r))
{
    const auto& d = std::get<RankTwo>(data_);
    const std::size_t k = d.e1.rows();
    if (!d.e1.square() || !d.e2.square() || d.e2.rows() != k || d.mu1.dim() != k || d.mu2.dim() != k)
        throw Error(ErrorKind::DimensionMismatch, "rank-two map: dimensions differ");
}

QWeightMap::QWeightMap(Assembled a) : data_(std::move(a)) {}

QWeightMap QWeightMap::assembled(QWeightMap first, QWeightMap second, std::optional<CornerData> corner)
{
    if (corner) {
        if (corner->q.rows() != first.dim() || corner->q.cols() != second.dim())
            throw Error(ErrorKind::DimensionMismatch, "corner operator must map the second block into the first");
        if (corner->bra.size() != corner->ket.size())
            throw Error(ErrorKind::PreconditionViolated, "corner bra and ket lists differ in length");
        for (std::size_t i = 0; i < corner->bra.size(); ++i)
            if (corner->bra[i].atom.dim() != first.dim() || corner->ket[i].dim() != second.dim())
                throw Error(ErrorKind::DimensionMismatch, "corner atoms must live over their blocks");
    }
    Assembled a;
    a.blocks.push_back(std::move(first));
    a.blocks.push_back(std::move(second));
    a.corner = std::move(corner);
    return QWeightMap(std::move(a));
}

std::size_t QWeightMap::dim() const
{
    if (const auto* r = rank_one())
        return r->t.rows();
    if (const auto* r = rank_two())
        return r->e1.rows();
    const auto& a = std::get<Assembled>(data_);
    return a.blocks[0].dim() + a.blocks[1].dim();
}

std::string QWeightMap::kind_name() const
{
    if (rank_one())
        return "rank_one";
    if (rank_two())
        return "rank_two";
    return "assembled";
}

namespace {

Matrix embedding(std::size_t total, std::size_t offset, std::size_t k)
{
    Matrix j(total, k);
    for (std::size_t i = 0; i < k; ++i)
        j(offset + i, i) = 1.0;
    return j;
}

void append_weight(FiniteForm& f, const BoundaryWeight& mu, const Matrix& target)
{
    for (const auto& term : mu.terms()) {
        f.pairs.push_back({f.atoms.size(), f.atoms.size(), term.lambda * target});
        f.atoms.push_back(term.atom);
    }
}

// Row-major vectorization.
CVector vec(const Matrix& m)
{
    return CVector(m.data().begin(), m.data().end());
}

Matrix unvec(std::span<const cplx> v, std::size_t k)
{
    return Matrix(k, k, CVector(v.begin(), v.end()));
}

Matrix gram_matrix(const std::vector<const WeightAtom*>& atoms, double t)
{
    const std::size_t n = atoms.size();
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const cplx v = atom_density(*atoms[i], *atoms[j], Kernel::One, {t, kInfinity}).trace();
            g(i, j) = v;
            g(j, i) = std::conj(v);
        }
    return g;
}

struct ChoiEntry {
    std::size_t bra;
    std::size_t ket;
    const Matrix* coefficient;
};

// Choi matrix [D_ab] of A -> sum <phi_i, A phi_j> C_ij compressed to an orthonormal basis psi_a
// of span(phi), where phi_j = sum_a R_aj psi_a and D_ab = sum conj(R_ai) R_bj C_ij.
Matrix compressed_choi(const Matrix& gram, const std::vector<ChoiEntry>& entries, std::size_t k)
{
    const auto es = hermitian_eigen(gram);
    const std::size_t n = gram.rows();
    const double top = std::max(es.values.empty() ? 0.0 : es.values.back(), 0.0);
    std::vector<std::size_t> kept;
    for (std::size_t a = 0; a < n; ++a)
        if (es.values[a] > 1e-12 * top)
            kept.push_back(a);
    const std::size_t r = kept.size();
    Matrix rmat(r, n);
    for (std::size_t a = 0; a < r; ++a) {
        const double s = std::sqrt(es.values[kept[a]]);
        for (std::size_t i = 0; i < n; ++i)
            rmat(a, i) = s * std::conj(es.vectors(i, kept[a]));
    }
    Matrix choi(r * k, r * k);
    for (const auto& e : entries)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < r; ++b) {
                const cplx w = std::conj(rmat(a, e.bra)) * rmat(b, e.ket);
                if (w == cplx{})
                    continue;
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t q = 0; q < k; ++q)
                        choi(a * k + p, b * k + q) += w * (*e.coefficient)(p, q);
            }
    return choi;
}

Window intersect(Window w, double t)
{
    return {std::max(w.lower, t), w.upper};
}

}  // namespace

FiniteForm finite_form(const QWeightMap& qw)
{
    FiniteForm f;
    f.dim = qw.dim();
    if (const auto* r = qw.rank_one()) {
        append_weight(f, r->mu, r->t);
        return f;
    }
    if (const auto* r = qw.rank_two()) {
        append_weight(f, r->mu1, r->e1);
        append_weight(f, r->mu2, r->e2);
        return f;
    }
    const auto& a = *qw.assembled_data();
    const std::size_t k1 = a.blocks[0].dim();
    const std::size_t k2 = a.blocks[1].dim();
    const Matrix j1 = embedding(k1 + k2, 0, k1);
    const Matrix j2 = embedding(k1 + k2, k1, k2);
    for (std::size_t b = 0; b < 2; ++b) {
        const Matrix& j = b == 0 ? j1 : j2;
        const FiniteForm inner = finite_form(a.blocks[b]);
        const std::size_t offset = f.atoms.size();
        for (const auto& atom : inner.atoms)
            f.atoms.push_back(atom.transformed(j));
        for (const auto& p : inner.pairs)
            f.pairs.push_back({offset + p.bra, offset + p.ket, j * p.target * j.adjoint()});
    }
    if (a.corner) {
        const auto& c = *a.corner;
        const Matrix upper = j1 * c.q * j2.adjoint();
        const Matrix lower = upper.adjoint();
        for (std::size_t i = 0; i < c.bra.size(); ++i) {
            const std::size_t fi = f.atoms.size();
            f.atoms.push_back(c.bra[i].atom.transformed(j1));
            f.atoms.push_back(c.ket[i].transformed(j2));
            const double w = c.scale * c.bra[i].lambda;
            f.pairs.push_back({fi, fi + 1, w * upper});
            f.pairs.push_back({fi + 1, fi, w * lower});
        }
    }
    return f;
}

Matrix dualized(const FiniteForm& form, const std::vector<OperatorTerm>& terms, Window window)
{
    Matrix out(form.dim, form.dim);
    for (const auto& p : form.pairs) {
        cplx v = 0.0;
        for (const auto& term : terms)
            v += pair_atoms(form.atoms[p.bra], form.atoms[p.ket], term.op, term.kernel, window).value;
        out += v * p.target;
    }
    return out;
}

Matrix dualized(const QWeightMap& qw, const StructuredObservable& obs)
{
    return dualized(finite_form(qw), obs.lowered(), obs.window());
}

GBRSample::GBRSample(std::shared_ptr<const FiniteForm> form, double t) : form_(std::move(form)), t_(t)
{
    if (!(t > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "GBR samples need t > 0");
    const std::size_t k = form_->dim;
    std::vector<const WeightAtom*> atoms;
    for (const auto& a : form_->atoms)
        atoms.push_back(&a);
    gram_ = gram_matrix(atoms, t);

    // X(B) = sum_p tr(B E_p) W_p, tr(B E) = sum_uv B_uv E_vu.
    x_map_ = Matrix(k * k, k * k);
    for (const auto& p : form_->pairs) {
        const Matrix e = atom_density(form_->atoms[p.bra], form_->atoms[p.ket], Kernel::ExpNeg, {t, kInfinity});
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t s = 0; s < k; ++s) {
                const cplx w = p.target(r, s);
                if (w == cplx{})
                    continue;
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v)
                        x_map_(r * k + s, u * k + v) += w * e(v, u);
            }
    }
    const Matrix solve = inverse(Matrix::identity(k * k) + x_map_);
    coeffs_.reserve(form_->pairs.size());
    for (const auto& p : form_->pairs)
        coeffs_.push_back(unvec(solve * vec(p.target), k));
}

Matrix GBRSample::apply(const std::vector<OperatorTerm>& terms, Window window) const
{
    const Window w = intersect(window, t_);
    Matrix out(dim(), dim());
    for (std::size_t i = 0; i < form_->pairs.size(); ++i) {
        const auto& p = form_->pairs[i];
        cplx v = 0.0;
        for (const auto& term : terms)
            v += pair_atoms(form_->atoms[p.bra], form_->atoms[p.ket], term.op, term.kernel, w).value;
        out += v * coeffs_[i];
    }
    return out;
}

Matrix GBRSample::apply(const StructuredObservable& obs) const
{
    return apply(obs.lowered(), obs.window());
}

Matrix GBRSample::reduced_choi() const
{
    std::vector<ChoiEntry> entries;
    for (std::size_t i = 0; i < form_->pairs.size(); ++i)
        entries.push_back({form_->pairs[i].bra, form_->pairs[i].ket, &coeffs_[i]});
    return compressed_choi(gram_, entries, dim());
}

bool GBRSample::is_cp(double tol) const
{
    const Matrix c = reduced_choi();
    return c.empty() || is_psd(c, tol);
}

double GBRSample::norm() const
{
    Matrix img(dim(), dim());
    for (std::size_t i = 0; i < form_->pairs.size(); ++i) {
        const auto& p = form_->pairs[i];
        img += gram_(p.bra, p.ket) * coeffs_[i];
    }
    return img.norm();
}

GBRSample gbr(const QWeightMap& qw, double t)
{
    return GBRSample(std::make_shared<const FiniteForm>(finite_form(qw)), t);
}

Matrix truncated_choi(const FiniteForm& form, double t)
{
    std::vector<const WeightAtom*> atoms;
    for (const auto& a : form.atoms)
        atoms.push_back(&a);
    std::vector<ChoiEntry> entries;
    for (const auto& p : form.pairs)
        entries.push_back({p.bra, p.ket, &p.target});
    return compressed_choi(gram_matrix(atoms, t), entries, form.dim);
}

double rank_one_coefficient(const QWeightMap& qw, double t)
{
    const auto* r = qw.rank_one();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, "rank-one coefficient needs a rank-one map");
    const double a = weight_value(r->mu, {{r->t, Kernel::ExpNeg}}, {t, kInfinity}).real();
    return 1.0 / (1.0 + a);
}

RankTwoSystem rank_two_system(const QWeightMap& qw, double t)
{
    const auto* r = qw.rank_two();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, "rank-two system needs a rank-two map");
    RankTwoSystem s;
    s.t = t;
    const BoundaryWeight* mu[2] = {&r->mu1, &r->mu2};
    const Matrix* e[2] = {&r->e1, &r->e2};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            s.x[i][j] = weight_value(*mu[i], {{*e[j], Kernel::ExpNeg}}, {t, kInfinity}).real();
    s.det = (1.0 + s.x[0][0]) * (1.0 + s.x[1][1]) - s.x[0][1] * s.x[1][0];
    if (std::abs(s.det) < 1e-12)
        throw Error(ErrorKind::SingularSystem, "det(I + X(t)) vanishes");
    s.h1 = s.x[0][1] / (1.0 + s.x[1][1]);
    s.h2 = s.x[1][0] / (1.0 + s.x[0][0]);
    s.inverse[0][0] = (1.0 + s.x[1][1]) / s.det;
    s.inverse[0][1] = -s.x[0][1] / s.det;
    s.inverse[1][0] = -s.x[1][0] / s.det;
    s.inverse[1][1] = (1.0 + s.x[0][0]) / s.det;
    return s;
}

QWeightReport validate_rank_one(const Matrix& t, const BoundaryWeight& mu, double tol)
{
    QWeightReport rep;
    if (!t.square() || t.rows() != mu.dim()) {
        rep.reasons.push_back("T and mu act on different spaces");
        return rep;
    }
    bool ok = true;
    if (!is_hermitian(t, tol) || !is_psd(t, tol)) {
        rep.reasons.push_back("T is not positive");
        return rep;
    }
    if (std::abs(t.norm() - 1.0) > tol) {
        rep.reasons.push_back("T does not have norm one");
        ok = false;
    }
    const ExtendedReal n = weight_eval(mu, StructuredObservable::id_minus_lambda(t));
    rep.normalization = n.value;
    if (n.infinite || n.value > 1.0 + tol) {
        rep.reasons.push_back("mu(I - Lambda(T)) exceeds 1");
        ok = false;
    }
    rep.valid = ok;
    const bool identity = max_abs_diff(t, Matrix::identity(t.rows())) <= tol;
    rep.unital = ok && identity && std::abs(n.value - 1.0) <= tol;
    return rep;
}

namespace {

GrowthPoly weight_growth(const BoundaryWeight& mu, const Matrix& m, Kernel kernel)
{
    GrowthPoly g;
    for (const auto& term : mu.terms())
        g += term.lambda * pair_growth(term.atom, term.atom, m, kernel);
    return g;
}

// lim_{t->0} x_ab / (1 + x_bb); infinite when the numerator outgrows the denominator.
double kappa_limit(const BoundaryWeight& num_weight, const BoundaryWeight& den_weight, const Matrix& e)
{
    const GrowthPoly num = weight_growth(num_weight, e, Kernel::ExpNeg);
    GrowthPoly den = weight_growth(den_weight, e, Kernel::ExpNeg);
    den.add_constant(1.0);
    const auto r = ratio_limit(num, den);
    return r ? r->real() : kInfinity;
}

bool structural_rank_two(const RankTwo& r, double tol, std::vector<std::string>& reasons)
{
    bool ok = true;
    for (const Matrix* e : {&r.e1, &r.e2}) {
        if (!is_hermitian(*e, tol) || !is_psd(*e, tol)) {
            reasons.push_back("e_i must be positive");
            return false;
        }
        if (std::abs(e->norm() - 1.0) > tol) {
            reasons.push_back("e_i must have norm one");
            ok = false;
        }
    }
    if (!is_psd(Matrix::identity(r.e1.rows()) - r.e1 - r.e2, tol)) {
        reasons.push_back("e1 + e2 exceeds I");
        ok = false;
    }
    return ok;
}

}  // namespace

RankTwoReport validate_rank_two(const QWeightMap& qw, const TGrid& grid, double tol)
{
    const auto* r = qw.rank_two();
    if (!r)
        throw Error(ErrorKind::PreconditionViolated, "validate_rank_two needs a rank-two map");
    RankTwoReport rep;
    rep.structural = structural_rank_two(*r, tol, rep.reasons);
    if (!rep.structural)
        return rep;

    const auto ts = grid.values();
    rep.h_monotone = true;
    rep.det_at_least_one = true;
    for (double t : ts) {
        const RankTwoSystem s = rank_two_system(qw, t);
        if (!rep.h1_curve.empty()) {
            if (s.h1 > rep.h1_curve.back().value + 1e-10 || s.h2 > rep.h2_curve.back().value + 1e-10)
                rep.h_monotone = false;
        }
        rep.h1_curve.push_back({t, s.h1});
        rep.h2_curve.push_back({t, s.h2});
        rep.det_curve.push_back({t, s.det});
        if (s.det < 1.0 - tol)
            rep.det_at_least_one = false;
    }
    rep.kappa1_grid = rep.h1_curve.front().value;
    rep.kappa2_grid = rep.h2_curve.front().value;
    rep.kappa1_error = rep.h1_curve.front().value - rep.h1_curve[1].value;
    rep.kappa2_error = rep.h2_curve.front().value - rep.h2_curve[1].value;
    rep.kappa1 = kappa_limit(r->mu1, r->mu2, r->e2);
    rep.kappa2 = kappa_limit(r->mu2, r->mu1, r->e1);

    bool ok = true;
    if (rep.kappa1 > 1.0 + tol || rep.kappa2 > 1.0 + tol) {
        rep.reasons.push_back("kappa exceeds 1");
        ok = false;
    }
    const Matrix sum = r->e1 + r->e2;
    const ExtendedReal x = weight_eval(r->mu1, StructuredObservable::id_minus_lambda(sum));
    const ExtendedReal y = weight_eval(r->mu2, StructuredObservable::id_minus_lambda(sum));
    rep.x = x.value;
    rep.y = y.value;
    if (x.infinite || y.infinite) {
        rep.reasons.push_back("mu_i(I - Lambda(e1 + e2)) is infinite");
        return rep;
    }
    if (!ok)
        return rep;

    const double k1 = std::min(rep.kappa1, 1.0);
    const double k2 = std::min(rep.kappa2, 1.0);
    const DominationResult d1 = dominates(r->mu1, r->mu2, k1);
    const DominationResult d2 = dominates(r->mu2, r->mu1, k2);
    rep.sampled_only = d1.sampled_only || d2.sampled_only;
    rep.kappa_inequalities = d1.holds && d2.holds;
    if (!rep.kappa_inequalities)
        rep.reasons.push_back("mu1 >= kappa1 mu2 or mu2 >= kappa2 mu1 fails");

    if (k1 >= 1.0 - tol || k2 >= 1.0 - tol) {
        const bool equal = weights_equal(r->mu1, r->mu2);
        rep.in_parallelogram = equal && std::abs(rep.x - rep.y) <= tol && rep.x >= -tol && rep.x <= 1.0 + tol;
        if (!equal)
            rep.reasons.push_back("kappa = 1 requires mu1 = mu2");
    } else {
        const double a = rep.x - k1 * rep.y;
        const double b = rep.y - k2 * rep.x;
        rep.in_parallelogram = a >= -tol && a <= 1.0 - k1 + tol && b >= -tol && b <= 1.0 - k2 + tol;
    }
    if (!rep.in_parallelogram)
        rep.reasons.push_back("(x, y) lies outside the parallelogram");
    if (!rep.h_monotone)
        rep.reasons.push_back("h curves increase along the grid");
    rep.valid = rep.kappa_inequalities && rep.in_parallelogram;
    if (rep.valid && !rep.det_at_least_one)
        rep.reasons.push_back("det(I + X(t)) < 1 on the grid");
    return rep;
}

GridCertificate certify_gbr(const QWeightMap& qw, const TGrid& grid, double tol)
{
    GridCertificate cert;
    cert.min_eigenvalue = kInfinity;
    const auto form = std::make_shared<const FiniteForm>(finite_form(qw));
    for (double t : grid.values()) {
        const GBRSample s(form, t);
        const Matrix c = s.reduced_choi();
        const double lo = c.empty() ? 0.0 : min_eigenvalue(c);
        const double n = s.norm();
        cert.min_eigenvalue = std::min(cert.min_eigenvalue, lo);
        cert.max_norm = std::max(cert.max_norm, n);
        const bool cp = c.empty() || is_psd(c, tol);
        if ((!cp || n > 1.0 + tol) && cert.holds) {
            cert.holds = false;
            cert.first_failure = t;
        }
    }
    return cert;
}

QWeightReport validate(const QWeightMap& qw, const TGrid& grid)
{
    if (const auto* r = qw.rank_one())
        return validate_rank_one(r->t, r->mu);
    if (qw.rank_two()) {
        const RankTwoReport r2 = validate_rank_two(qw, grid);
        QWeightReport rep;
        rep.valid = r2.valid;
        rep.reasons = r2.reasons;
        const auto* r = qw.rank_two();
        rep.unital = r2.valid && max_abs_diff(r->e1 + r->e2, Matrix::identity(r->e1.rows())) <= 1e-9
                  && std::abs(r2.x - 1.0) <= 1e-9 && std::abs(r2.y - 1.0) <= 1e-9;
        return rep;
    }
    const auto& a = *qw.assembled_data();
    QWeightReport rep;
    bool ok = true;
    bool unital = true;
    for (const auto& b : a.blocks) {
        const QWeightReport br = validate(b, grid);
        ok = ok && br.valid;
        unital = unital && br.unital;
        for (const auto& reason : br.reasons)
            rep.reasons.push_back("block: " + reason);
    }
    if (a.corner) {
        const auto* t1 = a.blocks[0].rank_one();
        const auto* t2 = a.blocks[1].rank_one();
        if (t1 && t2) {
            const Matrix& q = a.corner->q;
            if (!is_psd(t1->t - q * q.adjoint(), 1e-9) || !is_psd(t2->t - q.adjoint() * q, 1e-9)) {
                rep.reasons.push_back("corner operator violates QQ* <= T1 or Q*Q <= T2");
                ok = false;
            }
        }
    }
    if (ok) {
        const GridCertificate cert = certify_gbr(qw, grid);
        if (!cert.holds) {
            rep.reasons.push_back("GBR sample is not a CP contraction on the grid");
            ok = false;
        }
    }
    rep.valid = ok;
    rep.unital = ok && unital;
    return rep;
}

SubordinationResult subordination_check(const QWeightMap& omega, const QWeightMap& eta, const TGrid& grid, double tol)
{
    if (omega.dim() != eta.dim())
        throw Error(ErrorKind::DimensionMismatch, "subordination needs maps over the same space");
    const auto fo = std::make_shared<const FiniteForm>(finite_form(omega));
    const auto fe = std::make_shared<const FiniteForm>(finite_form(eta));
    std::vector<const WeightAtom*> atoms;
    for (const auto& a : fo->atoms)
        atoms.push_back(&a);
    for (const auto& a : fe->atoms)
        atoms.push_back(&a);
    const std::size_t offset = fo->atoms.size();
    SubordinationResult res;
    for (double t : grid.values()) {
        const GBRSample so(fo, t);
        const GBRSample se(fe, t);
        std::vector<Matrix> negated;
        negated.reserve(se.coefficients().size());
        for (const auto& c : se.coefficients())
            negated.push_back(-1.0 * c);
        std::vector<ChoiEntry> entries;
        for (std::size_t i = 0; i < fo->pairs.size(); ++i)
            entries.push_back({fo->pairs[i].bra, fo->pairs[i].ket, &so.coefficients()[i]});
        for (std::size_t i = 0; i < fe->pairs.size(); ++i)
            entries.push_back({offset + fe->pairs[i].bra, offset + fe->pairs[i].ket, &negated[i]});
        const Matrix choi = compressed_choi(gram_matrix(atoms, t), entries, omega.dim());
        if (choi.empty() || is_psd(choi, tol))
            continue;
        const auto es = hermitian_eigen(choi);
        res.holds = false;
        res.first_failure = SubordinationFailure{t, es.values.front(), es.vectors.col(0)};
        break;
    }
    return res;
}

SpineResult normal_spine_trivial(const QWeightMap& qw, const TGrid& grid)
{
    SpineResult res;
    res.cut = 1.0;
    const auto form = std::make_shared<const FiniteForm>(finite_form(qw));
    const auto probe = StructuredObservable::id(qw.dim(), {res.cut, kInfinity});
    for (double t : grid.values())
        res.evidence.push_back({t, GBRSample(form, t).apply(probe).norm()});

    if (const auto* r = qw.rank_one()) {
        res.analytic = true;
        res.trivial = weight_eval(r->mu, StructuredObservable::lambda(r->t)).infinite;
        return res;
    }
    if (const auto* r = qw.rank_two()) {
        // (I + X)^{-1} -> 0 iff both diagonal entries of X diverge, or mu1 = mu2 with
        // mu(Lambda(e1 + e2)) infinite.
        res.analytic = true;
        if (weights_equal(r->mu1, r->mu2))
            res.trivial = weight_eval(r->mu1, StructuredObservable::lambda(r->e1 + r->e2)).infinite;
        else
            res.trivial = weight_eval(r->mu1, StructuredObservable::lambda(r->e1)).infinite
                       && weight_eval(r->mu2, StructuredObservable::lambda(r->e2)).infinite;
        return res;
    }
    const auto& a = *qw.assembled_data();
    res.trivial = normal_spine_trivial(a.blocks[0], grid).trivial && normal_spine_trivial(a.blocks[1], grid).trivial;
    return res;
}

}  // namespace qw
