#include "qw/ce_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qw/errors.hpp"

namespace qw {

namespace {

Matrix as_column_matrix(const std::vector<Matrix>& ms)
{
    const std::size_t n = ms.front().data().size();
    Matrix cols(n, ms.size());
    for (std::size_t j = 0; j < ms.size(); ++j)
        cols.set_col(j, ms[j].data());
    return cols;
}

}  // namespace

CEAlgebra::CEAlgebra(CPMap projection, double range_tol) : projection_(std::move(projection))
{
    const std::size_t n = projection_.in_dim();
    if (projection_.out_dim() != n)
        throw Error(ErrorKind::DimensionMismatch, "boundary expectation must be an endomorphism");
    std::vector<Matrix> images;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            images.push_back(projection_.apply(Matrix::unit(n, i, j)));
    const Matrix range = orthonormal_range(as_column_matrix(images), range_tol);
    if (range.cols() == 0)
        throw Error(ErrorKind::DegenerateRange, "range of L is zero");
    for (std::size_t j = 0; j < range.cols(); ++j)
        basis_.emplace_back(n, n, range.col(j));
    unit_ = projection_.apply(Matrix::identity(n));

    const std::size_t d = basis_.size();
    constants_.resize(d * d * d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            const Matrix p = projection_.apply(basis_[a] * basis_[b]);
            for (std::size_t c = 0; c < d; ++c)
                constants_[(a * d + b) * d + c] = hs_inner(basis_[c], p);
        }
}

cplx CEAlgebra::structure_constant(std::size_t a, std::size_t b, std::size_t c) const
{
    const std::size_t d = dim();
    if (a >= d || b >= d || c >= d)
        throw Error(ErrorKind::IndexOutOfRange, "structure constant index");
    return constants_[(a * d + b) * d + c];
}

CVector CEAlgebra::coordinates(const Matrix& x) const
{
    CVector c(dim());
    for (std::size_t a = 0; a < dim(); ++a)
        c[a] = hs_inner(basis_[a], x);
    return c;
}

Matrix CEAlgebra::element(std::span<const cplx> coords) const
{
    Matrix x(unit_.rows(), unit_.cols());
    for (std::size_t a = 0; a < dim(); ++a)
        x += coords[a] * basis_[a];
    return x;
}

bool CEAlgebra::contains(const Matrix& x, double tol) const
{
    return (x - element(coordinates(x))).frobenius() <= tol * std::max(1.0, x.frobenius());
}

Matrix CEAlgebra::product(const Matrix& x, const Matrix& y) const
{
    if (!contains(x) || !contains(y))
        throw Error(ErrorKind::NotInRange, "Choi-Effros product of elements outside range(L)");
    return projection_.apply(x * y);
}

Matrix choi_effros_product(const CPMap& l, const Matrix& x, const Matrix& y)
{
    const double sx = std::max(1.0, x.frobenius());
    const double sy = std::max(1.0, y.frobenius());
    if ((l.apply(x) - x).frobenius() > default_tol.range * sx || (l.apply(y) - y).frobenius() > default_tol.range * sy)
        throw Error(ErrorKind::NotInRange, "Choi-Effros product of elements outside range(L)");
    return l.apply(x * y);
}

std::vector<Matrix> minimal_central_projections(const CEAlgebra& alg, std::uint64_t seed)
{
    const std::size_t d = alg.dim();
    if (d > 16)
        throw Error(ErrorKind::PreconditionViolated, "algebra dimension above 16");
    if (d == 1)
        return {alg.unit()};

    // Left multiplication matrices in basis coordinates: (M_a)_{cb} = coefficient of c in a * b.
    std::vector<Matrix> left(d, Matrix(d, d));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            for (std::size_t c = 0; c < d; ++c)
                left[a](c, b) = alg.structure_constant(a, b, c);

    // Center: kernel of z -> (z*b - b*z)_b.
    Matrix comm(d * d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            for (std::size_t c = 0; c < d; ++c)
                comm(b * d + c, a) = alg.structure_constant(a, b, c) - alg.structure_constant(b, a, c);
    const auto ker = hermitian_eigen(comm.adjoint() * comm);
    const double kscale = std::max(1.0, ker.values.back());
    std::vector<CVector> center;
    for (std::size_t i = 0; i < d; ++i)
        if (ker.values[i] <= 1e-14 * kscale + 1e-18)
            center.push_back(ker.vectors.col(i));
    if (center.empty())
        throw Error(ErrorKind::NumericalDegeneracy, "empty center");
    if (center.size() == 1)
        return {alg.unit()};

    // Trace form <x, y> = Tr(M_{x^* * y}) makes left multiplication by self-adjoint elements Hermitian.
    Matrix gram(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        const CVector astar = alg.coordinates(alg.basis()[a].adjoint());
        for (std::size_t b = 0; b < d; ++b) {
            const CVector prod = alg.coordinates(alg.product(alg.element(astar), alg.basis()[b]));
            Matrix m(d, d);
            for (std::size_t c = 0; c < d; ++c)
                m += prod[c] * left[c];
            gram(a, b) = m.trace();
        }
    }
    gram = 0.5 * (gram + gram.adjoint());
    const auto ges = hermitian_eigen(gram);
    if (ges.values.front() <= 1e-10 * ges.values.back())
        throw Error(ErrorKind::NumericalDegeneracy, "trace form is not faithful");
    const Matrix gsqrt = hermitian_apply(gram, [](double v) { return std::sqrt(v); });
    const Matrix gisqrt = hermitian_apply(gram, [](double v) { return 1.0 / std::sqrt(v); });

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const CVector unit = alg.coordinates(alg.unit());
    for (int attempt = 0; attempt < 8; ++attempt) {
        CVector zc(d);
        for (const auto& c : center) {
            const cplx w(normal(rng), normal(rng));
            for (std::size_t i = 0; i < d; ++i)
                zc[i] += w * c[i];
        }
        const Matrix zm = alg.element(zc);
        const CVector zsa = alg.coordinates(0.5 * (zm + zm.adjoint()));
        Matrix mz(d, d);
        for (std::size_t c = 0; c < d; ++c)
            mz += zsa[c] * left[c];
        Matrix h = gsqrt * mz * gisqrt;
        h = 0.5 * (h + h.adjoint());
        const auto es = hermitian_eigen(h);
        const double spread = std::max(1.0, std::abs(es.values.back()) + std::abs(es.values.front()));

        std::vector<std::vector<std::size_t>> clusters;
        for (std::size_t i = 0; i < d; ++i) {
            if (!clusters.empty() && es.values[i] - es.values[clusters.back().back()] <= default_tol.cluster * spread)
                clusters.back().push_back(i);
            else
                clusters.push_back({i});
        }
        if (clusters.size() != center.size())
            continue;

        std::vector<Matrix> projections;
        bool ok = true;
        for (const auto& cl : clusters) {
            Matrix pc(d, d);
            for (std::size_t i : cl) {
                const CVector v = es.vectors.col(i);
                pc += Matrix::outer(v, v);
            }
            const Matrix spectral = gisqrt * pc * gsqrt;
            const Matrix p = alg.element(spectral * unit);
            if ((alg.product(p, p) - p).frobenius() > 1e-7 * std::max(1.0, p.frobenius()) || p.frobenius() < 1e-8)
                ok = false;
            projections.push_back(p);
        }
        if (!ok)
            continue;
        Matrix total(alg.unit().rows(), alg.unit().cols());
        for (const auto& p : projections)
            total += p;
        if ((total - alg.unit()).frobenius() > 1e-7 * std::max(1.0, alg.unit().frobenius()))
            continue;
        return projections;
    }
    throw Error(ErrorKind::NumericalDegeneracy, "could not separate the center spectrally");
}

std::optional<MatrixUnits> extract_matrix_units(const CPMap& l, const BlockStructure& blocks)
{
    if (blocks.count() != 2)
        throw Error(ErrorKind::PreconditionViolated, "matrix units need a two-block structure");
    const auto rank_of = [](const CornerMap& c) { return numerical_rank(c.matrix, default_tol.range); };
    if (rank_of(block_component(l, blocks, 0, 0)) != 1 || rank_of(block_component(l, blocks, 1, 1)) != 1)
        throw Error(ErrorKind::PreconditionViolated, "diagonal corners of L must have one-dimensional range");

    const CornerMap l12 = block_component(l, blocks, 0, 1);
    const double scale = std::max(1.0, l.superoperator().frobenius());
    if (l12.matrix.frobenius() <= 1e-12 * scale)
        return std::nullopt;

    // Strongest output of L_12 over the elementary inputs.
    Matrix best;
    double best_norm = 0.0;
    for (std::size_t a = 0; a < l12.rows * l12.cols; ++a) {
        CVector e(l12.rows * l12.cols);
        e[a] = 1.0;
        const Matrix y(l12.rows, l12.cols, l12.matrix * std::span<const cplx>(e));
        const double nrm = y.norm();
        if (nrm > best_norm) {
            best_norm = nrm;
            best = y;
        }
    }
    const std::size_t n = blocks.total();
    Matrix u(n, n);
    u.set_block(blocks.offset(0), blocks.offset(1), (1.0 / best_norm) * best);
    const Matrix us = u.adjoint();
    return MatrixUnits{l.apply(u * us), u, us, l.apply(us * u)};
}

double matrix_unit_defect(const CPMap& l, const MatrixUnits& e)
{
    const auto idx = [](std::size_t i, std::size_t j) { return 2 * i + j; };
    double defect = 0.0;
    const Matrix zero(e[0].rows(), e[0].cols());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t m = 0; m < 2; ++m) {
                    const Matrix lhs = l.apply(e[idx(i, j)] * e[idx(k, m)]);
                    const Matrix& rhs = j == k ? e[idx(i, m)] : zero;
                    defect = std::max(defect, max_abs_diff(lhs, rhs));
                }
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            defect = std::max(defect, max_abs_diff(e[idx(i, j)], e[idx(j, i)].adjoint()));
    defect = std::max(defect, max_abs_diff(e[0] + e[3], l.apply(Matrix::identity(e[0].rows()))));
    for (const auto& x : e)
        defect = std::max(defect, max_abs_diff(l.apply(x), x));
    return defect;
}

}  // namespace qw
