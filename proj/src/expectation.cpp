#include "qw/expectation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qw/ce_algebra.hpp"
#include "qw/errors.hpp"
#include "qw/forms.hpp"
#include "qw/limits.hpp"

namespace qw {

namespace {

constexpr double kConvergence = 1e-7;

Matrix from_entries(std::size_t n, const std::vector<cplx>& v)
{
    return Matrix(n, n, v);
}

// Expansions of the entries of X_t on row-major vec: X(B) = sum_p <phi_i, (B (x) e^{-x}) phi_j> W_p.
std::vector<GrowthPoly> x_growth(const FiniteForm& f)
{
    const std::size_t k = f.dim;
    const std::size_t n = k * k;
    std::vector<GrowthPoly> g(n * n);
    for (const auto& p : f.pairs)
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v) {
                const GrowthPoly gp =
                    pair_growth(f.atoms[p.bra], f.atoms[p.ket], Matrix::unit(k, u, v), Kernel::ExpNeg);
                for (std::size_t r = 0; r < k; ++r)
                    for (std::size_t s = 0; s < k; ++s)
                        if (const cplx w = p.target(r, s); w != cplx{})
                            g[(r * k + s) * n + (u * k + v)] += w * gp;
            }
    return g;
}

// I - (I + X)^{-1}. Rows are equilibrated first: deep in the expansion the entries of X span
// many orders of magnitude.
Matrix expectation_from_x(const Matrix& x)
{
    const std::size_t n = x.rows();
    Matrix a = Matrix::identity(n) + x;
    Matrix scale(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            m = std::max(m, std::abs(a(i, j)));
        scale(i, i) = m > 0.0 ? 1.0 / m : 1.0;
    }
    return Matrix::identity(n) - inverse(scale * a) * scale;
}

Matrix vec_columns(const std::vector<Matrix>& ms, bool normalize)
{
    if (ms.empty())
        return Matrix(0, 0);
    const std::size_t n = ms.front().rows() * ms.front().cols();
    Matrix cols(n, ms.size());
    for (std::size_t j = 0; j < ms.size(); ++j) {
        const double nrm = ms[j].frobenius();
        const double s = normalize && nrm > 0.0 ? 1.0 / nrm : 1.0;
        for (std::size_t i = 0; i < n; ++i)
            cols(i, j) = s * ms[j].data()[i];
    }
    return cols;
}

std::size_t span_rank(const std::vector<Matrix>& ms, double rel_tol)
{
    // Columns are normalized before orthogonalization, so round-off images must go first.
    double largest = 0.0;
    for (const auto& m : ms)
        largest = std::max(largest, m.frobenius());
    std::vector<Matrix> nonzero;
    std::copy_if(ms.begin(), ms.end(), std::back_inserter(nonzero),
                 [&](const Matrix& m) { return m.frobenius() > rel_tol * largest && m.frobenius() > 1e-300; });
    if (nonzero.empty())
        return 0;
    return orthonormal_range(vec_columns(nonzero, true), rel_tol).cols();
}

std::vector<Matrix> range_images(const CPMap& l)
{
    const std::size_t k = l.in_dim();
    std::vector<Matrix> out;
    for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v)
            out.push_back(l.apply(Matrix::unit(k, u, v)));
    return out;
}

}  // namespace

std::vector<double> default_t_sequence()
{
    std::vector<double> ts;
    for (int n = 0; n <= 14; ++n)
        ts.push_back(std::pow(10.0, -0.5 * n));
    return ts;
}

Matrix truncated_expectation(const QWeightMap& qw, double t)
{
    return expectation_from_x(gbr(qw, t).x_map());
}

ExpectationResult boundary_expectation(const QWeightMap& qw, const std::vector<double>& ts, std::uint64_t seed)
{
    if (ts.empty())
        throw Error(ErrorKind::PreconditionViolated, "empty t-sequence");
    if (!normal_spine_trivial(qw).trivial)
        throw Error(ErrorKind::NotTrivialSpine, "boundary expectation needs a trivial normal spine");
    const std::size_t k = qw.dim();
    const std::size_t n = k * k;
    const FiniteForm form = finite_form(qw);
    const std::vector<GrowthPoly> x = x_growth(form);
    double power = 0.0;
    for (const auto& g : x)
        power = std::max(power, g.max_power());
    const LogScaleLimit lim = log_scale_limit(
        [&](double ell) -> std::vector<cplx> {
            std::vector<cplx> e(n * n);
            for (std::size_t i = 0; i < e.size(); ++i)
                e[i] = x[i].at_log(ell);
            const Matrix l = expectation_from_x(from_entries(n, e));
            return {l.data().begin(), l.data().end()};
        },
        power);

    ExpectationResult res;
    res.limit_spread = lim.spread;
    res.converged = lim.spread < kConvergence;
    Matrix l = from_entries(n, lim.value);
    std::vector<double> sorted = ts;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    std::vector<Matrix> iterates;
    for (const double t : sorted)
        iterates.push_back(truncated_expectation(qw, t));
    if (!res.converged)
        l = iterates.back();
    for (std::size_t i = 0; i < sorted.size(); ++i)
        res.residual_curve.push_back({sorted[i], (iterates[i] - l).frobenius()});
    res.l = CPMap::from_superoperator(k, k, l);
    res.axioms = verify_axioms(res.l, qw, seed);
    return res;
}

std::vector<Matrix> probe_images(const QWeightMap& qw, std::uint64_t seed)
{
    const FiniteForm form = finite_form(qw);
    const std::size_t k = form.dim;
    struct Probe {
        Kernel kernel;
        Window window;
    };
    const Probe probes[] = {{Kernel::OneMinusExp, {0.0, kInfinity}}, {Kernel::ExpNeg, {0.1, kInfinity}},
                            {Kernel::ExpNeg, {1.0, kInfinity}},      {Kernel::One, {0.1, kInfinity}},
                            {Kernel::One, {1.0, kInfinity}}};
    // breve is linear in M, so every probe image is a combination of the matrix-unit images.
    std::vector<std::vector<Matrix>> unit_images;
    for (const auto& p : probes) {
        std::vector<Matrix> row;
        for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v)
                row.push_back(dualized(form, {{Matrix::unit(k, u, v), p.kernel}}, p.window));
        unit_images.push_back(std::move(row));
    }
    std::vector<Matrix> ms;
    for (std::size_t i = 0; i < k; ++i) {
        ms.push_back(Matrix::unit(k, i, i));
        for (std::size_t j = i + 1; j < k; ++j) {
            ms.push_back(Matrix::unit(k, i, j) + Matrix::unit(k, j, i));
            ms.push_back(cplx(0.0, 1.0) * (Matrix::unit(k, i, j) - Matrix::unit(k, j, i)));
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int r = 0; r < 32; ++r) {
        Matrix a(k, k);
        for (auto& x : a.data())
            x = cplx(normal(rng), normal(rng));
        ms.push_back(0.5 * (a + a.adjoint()));
    }
    std::vector<Matrix> out;
    for (const auto& images : unit_images)
        for (const auto& m : ms) {
            Matrix img(k, k);
            for (std::size_t u = 0; u < k; ++u)
                for (std::size_t v = 0; v < k; ++v)
                    if (m(u, v) != cplx{})
                        img += m(u, v) * images[u * k + v];
            out.push_back(std::move(img));
        }
    return out;
}

AxiomFlags verify_axioms(const CPMap& l, const QWeightMap& qw, std::uint64_t seed, double tol)
{
    AxiomFlags f;
    const std::vector<Matrix> probes = probe_images(qw, seed);
    f.cp = is_completely_positive(l, tol);
    for (const auto& p : probes)
        f.fix_residual = std::max(f.fix_residual, (l.apply(p) - p).frobenius() / std::max(1.0, p.frobenius()));
    f.fixes_range = f.fix_residual <= tol;
    f.range_rank = span_rank(probes, 1e-8);
    const std::vector<Matrix> range = range_images(l);
    f.l_rank = span_rank(range, tol);
    std::vector<Matrix> both = probes;
    both.insert(both.end(), range.begin(), range.end());
    f.range_equality = f.range_rank == f.l_rank && span_rank(both, tol) == f.l_rank;
    f.idempotent_norm_one = f.cp && is_cp_idempotent_contraction(l, tol) && std::abs(cp_norm(l, tol) - 1.0) <= tol;
    return f;
}

StandardForm standard_form_rank_two(const QWeightMap& qw)
{
    const auto* r2 = qw.rank_two();
    if (!r2)
        throw Error(ErrorKind::PreconditionViolated, "standard form needs a rank-two map");
    const ExpectationResult res = boundary_expectation(qw);
    const CEAlgebra alg(res.l, 1e-6);
    if (alg.dim() != 2)
        throw Error(ErrorKind::RankMismatch, "range of L has dimension " + std::to_string(alg.dim()));
    std::vector<Matrix> p = minimal_central_projections(alg);
    if (p.size() != 2)
        throw Error(ErrorKind::RankMismatch, "CE algebra is not commutative of dimension two");

    // e_j = sum_l c[j][l] p_l, so that breve = sum_l (sum_j c[j][l] mu_j) p_l.
    const auto coefficients = [&](const Matrix& e) {
        Matrix g(2, 2);
        CVector rhs(2);
        for (std::size_t a = 0; a < 2; ++a) {
            rhs[a] = hs_inner(p[a], e);
            for (std::size_t b = 0; b < 2; ++b)
                g(a, b) = hs_inner(p[a], p[b]);
        }
        return inverse(g) * rhs;
    };
    CVector c1 = coefficients(r2->e1);
    CVector c2 = coefficients(r2->e2);
    if (std::abs(c1[1]) > std::abs(c1[0])) {
        std::swap(p[0], p[1]);
        std::swap(c1[0], c1[1]);
        std::swap(c2[0], c2[1]);
    }
    ShapeDictionary dict(qw.dim());
    if (!dict.add(r2->mu1) || !dict.add(r2->mu2))
        throw Error(ErrorKind::UnsupportedWeightComparison, "standard form needs closed-form profiles");
    const Matrix f1 = dict.form(r2->mu1);
    const Matrix f2 = dict.form(r2->mu2);
    const auto recombined = [&](std::size_t l) {
        if (std::abs(c1[l].imag()) > 1e-6 || std::abs(c2[l].imag()) > 1e-6)
            throw Error(ErrorKind::RankMismatch, "projections do not expand the input data over the reals");
        const Matrix f = c1[l].real() * f1 + c2[l].real() * f2;
        if (f.rows() > 0 && min_eigenvalue(f) < -1e-9 * std::max(1.0, f.norm()))
            throw Error(ErrorKind::RankMismatch, "recombined weight is not positive");
        return dict.weight(f);
    };

    StandardForm out;
    out.mu1 = recombined(0);
    out.mu2 = recombined(1);
    out.e1 = p[0];
    out.e2 = p[1];
    out.l = res.l;
    const std::size_t k = qw.dim();
    out.unit_defect = (p[0] + p[1] - res.l.apply(Matrix::identity(k))).frobenius();
    out.box_condition = true;
    const Matrix id = Matrix::identity(k);
    for (int i = 0; i <= 20; ++i)
        for (int j = 0; j <= 20; ++j) {
            const double x1 = -0.5 + 0.1 * i;
            const double x2 = -0.5 + 0.1 * j;
            const Matrix op = x1 * p[0] + x2 * p[1];
            const bool in_box = x1 > -1e-9 && x1 < 1.0 + 1e-9 && x2 > -1e-9 && x2 < 1.0 + 1e-9;
            const bool between = is_psd(op, 1e-7) && is_psd(id - op, 1e-7);
            out.box_condition = out.box_condition && in_box == between;
        }
    return out;
}

TrichotomyResult range_rank_trichotomy(const QWeightMap& qw, std::uint64_t seed)
{
    if (qw.dim() != 2)
        throw Error(ErrorKind::PreconditionViolated, "the trichotomy concerns maps over C^2");
    TrichotomyResult out;
    out.rank = span_rank(probe_images(qw, seed), 1e-8);
    out.consistent = out.rank == 1 || out.rank == 2 || out.rank == 4;
    out.q_pure_possible = out.rank == 1 || out.rank == 4;
    return out;
}

}  // namespace qw
