#include "qw/cp_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qw/errors.hpp"

namespace qw {

CPMap::CPMap(std::size_t in_dim, std::size_t out_dim, Matrix choi) : in_(in_dim), out_(out_dim), choi_(std::move(choi))
{
    if (choi_.rows() != in_ * out_ || choi_.cols() != in_ * out_)
        throw Error(ErrorKind::DimensionMismatch, "Choi matrix size");
}

CPMap CPMap::from_function(std::size_t in_dim, std::size_t out_dim, const std::function<Matrix(const Matrix&)>& f)
{
    Matrix c(in_dim * out_dim, in_dim * out_dim);
    for (std::size_t i = 0; i < in_dim; ++i)
        for (std::size_t j = 0; j < in_dim; ++j) {
            const Matrix y = f(Matrix::unit(in_dim, i, j));
            if (y.rows() != out_dim || y.cols() != out_dim)
                throw Error(ErrorKind::DimensionMismatch, "map output size");
            for (std::size_t r = 0; r < out_dim; ++r)
                for (std::size_t s = 0; s < out_dim; ++s)
                    c(i * out_dim + r, j * out_dim + s) = y(r, s);
        }
    return CPMap(in_dim, out_dim, std::move(c));
}

CPMap CPMap::from_superoperator(std::size_t in_dim, std::size_t out_dim, const Matrix& s)
{
    if (s.rows() != out_dim * out_dim || s.cols() != in_dim * in_dim)
        throw Error(ErrorKind::DimensionMismatch, "superoperator size");
    Matrix c(in_dim * out_dim, in_dim * out_dim);
    for (std::size_t i = 0; i < in_dim; ++i)
        for (std::size_t j = 0; j < in_dim; ++j)
            for (std::size_t r = 0; r < out_dim; ++r)
                for (std::size_t t = 0; t < out_dim; ++t)
                    c(i * out_dim + r, j * out_dim + t) = s(r * out_dim + t, i * in_dim + j);
    return CPMap(in_dim, out_dim, std::move(c));
}

CPMap CPMap::identity(std::size_t n)
{
    return from_function(n, n, [](const Matrix& x) { return x; });
}

CPMap CPMap::zero(std::size_t in_dim, std::size_t out_dim)
{
    return CPMap(in_dim, out_dim, Matrix(in_dim * out_dim, in_dim * out_dim));
}

Matrix CPMap::apply(const Matrix& x) const
{
    if (x.rows() != in_ || x.cols() != in_)
        throw Error(ErrorKind::DimensionMismatch, "map input size");
    Matrix y(out_, out_);
    for (std::size_t i = 0; i < in_; ++i)
        for (std::size_t j = 0; j < in_; ++j) {
            const cplx xij = x(i, j);
            if (xij == cplx{})
                continue;
            for (std::size_t r = 0; r < out_; ++r)
                for (std::size_t s = 0; s < out_; ++s)
                    y(r, s) += xij * choi_(i * out_ + r, j * out_ + s);
        }
    return y;
}

Matrix CPMap::superoperator() const
{
    Matrix s(out_ * out_, in_ * in_);
    for (std::size_t i = 0; i < in_; ++i)
        for (std::size_t j = 0; j < in_; ++j)
            for (std::size_t r = 0; r < out_; ++r)
                for (std::size_t t = 0; t < out_; ++t)
                    s(r * out_ + t, i * in_ + j) = choi_(i * out_ + r, j * out_ + t);
    return s;
}

CPMap CPMap::after(const CPMap& inner) const
{
    if (inner.out_ != in_)
        throw Error(ErrorKind::DimensionMismatch, "map composition");
    return from_superoperator(inner.in_, out_, superoperator() * inner.superoperator());
}

CPMap& CPMap::operator+=(const CPMap& o)
{
    if (in_ != o.in_ || out_ != o.out_)
        throw Error(ErrorKind::DimensionMismatch, "map sum");
    choi_ += o.choi_;
    return *this;
}

CPMap& CPMap::operator-=(const CPMap& o)
{
    if (in_ != o.in_ || out_ != o.out_)
        throw Error(ErrorKind::DimensionMismatch, "map difference");
    choi_ -= o.choi_;
    return *this;
}

bool is_completely_positive(const CPMap& phi, double tol)
{
    return is_psd(phi.choi(), tol);
}

double cp_norm(const CPMap& phi, double tol)
{
    if (!is_completely_positive(phi, tol))
        throw Error(ErrorKind::NotCP, "cp_norm requires a completely positive map");
    return phi.apply(Matrix::identity(phi.in_dim())).norm();
}

bool is_cp_idempotent_contraction(const CPMap& l, double tol)
{
    if (l.in_dim() != l.out_dim() || !is_completely_positive(l, tol))
        return false;
    const Matrix s = l.superoperator();
    if ((s * s - s).frobenius() > tol * std::max(1.0, s.frobenius()))
        return false;
    const double n = cp_norm(l, tol);
    return n <= tol || std::abs(n - 1.0) <= tol;
}

BlockStructure::BlockStructure(std::vector<std::size_t> dims) : dims_(std::move(dims))
{
    if (dims_.empty() || std::find(dims_.begin(), dims_.end(), 0u) != dims_.end())
        throw Error(ErrorKind::PreconditionViolated, "block dimensions must be positive");
    total_ = std::accumulate(dims_.begin(), dims_.end(), std::size_t{0});
}

std::size_t BlockStructure::dim(std::size_t i) const
{
    if (i >= dims_.size())
        throw Error(ErrorKind::IndexOutOfRange, "block index");
    return dims_[i];
}

std::size_t BlockStructure::offset(std::size_t i) const
{
    if (i >= dims_.size())
        throw Error(ErrorKind::IndexOutOfRange, "block index");
    return std::accumulate(dims_.begin(), dims_.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
}

Matrix CornerMap::apply(const Matrix& x) const
{
    if (x.rows() != rows || x.cols() != cols)
        throw Error(ErrorKind::DimensionMismatch, "corner input size");
    const CVector y = matrix * x.data();
    return Matrix(rows, cols, y);
}

bool CornerMap::is_zero(double tol) const
{
    return matrix.frobenius() <= tol;
}

CornerMap block_component(const CPMap& phi, const BlockStructure& blocks, std::size_t i, std::size_t j)
{
    if (blocks.total() != phi.in_dim() || phi.in_dim() != phi.out_dim())
        throw Error(ErrorKind::DimensionMismatch, "block structure does not match map");
    const std::size_t ri = blocks.offset(i);
    const std::size_t cj = blocks.offset(j);
    const std::size_t di = blocks.dim(i);
    const std::size_t dj = blocks.dim(j);
    CornerMap out{di, dj, Matrix(di * dj, di * dj)};
    const std::size_t n = phi.in_dim();
    for (std::size_t a = 0; a < di; ++a)
        for (std::size_t b = 0; b < dj; ++b) {
            const Matrix y = phi.apply(Matrix::unit(n, ri + a, cj + b));
            for (std::size_t r = 0; r < di; ++r)
                for (std::size_t s = 0; s < dj; ++s)
                    out.matrix(r * dj + s, a * dj + b) = y(ri + r, cj + s);
        }
    return out;
}

CPMap assemble_block_map(const Matrix& p1, const Matrix& p2, const Matrix& q, const CPMap& sigma)
{
    const std::size_t k = p1.rows();
    if (sigma.out_dim() != 2 || p2.rows() != k || q.rows() != k || q.cols() != k)
        throw Error(ErrorKind::DimensionMismatch, "extractor data");
    const Matrix qs = q.adjoint();
    return CPMap::from_function(sigma.in_dim(), 2 * k, [&](const Matrix& a) {
        const Matrix s = sigma.apply(a);
        Matrix out(2 * k, 2 * k);
        out.set_block(0, 0, s(0, 0) * p1);
        out.set_block(0, k, s(0, 1) * q);
        out.set_block(k, 0, s(1, 0) * qs);
        out.set_block(k, k, s(1, 1) * p2);
        return out;
    });
}

bool extractor_check(const Matrix& p1, const Matrix& p2, const Matrix& q, const CPMap& sigma, double tol)
{
    if (max_abs_diff(p1 * q * p2, q) > tol * std::max(1.0, q.frobenius()))
        return false;
    if (!is_psd(p1 - q * q.adjoint(), tol) || !is_psd(p2 - q.adjoint() * q, tol))
        return false;
    return is_completely_positive(sigma, tol);
}

}  // namespace qw
