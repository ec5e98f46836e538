#include "qw/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qw/errors.hpp"

namespace qw {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries))
{
    if (data_.size() != rows * cols)
        throw Error(ErrorKind::DimensionMismatch, "matrix entry count");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<cplx>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw Error(ErrorKind::DimensionMismatch, "ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d)
{
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        m(i, i) = d[i];
    return m;
}

Matrix Matrix::unit(std::size_t n, std::size_t i, std::size_t j)
{
    Matrix m(n, n);
    m(i, j) = 1.0;
    return m;
}

Matrix Matrix::outer(std::span<const cplx> u, std::span<const cplx> v)
{
    Matrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            m(i, j) = u[i] * std::conj(v[j]);
    return m;
}

Matrix Matrix::column(std::span<const cplx> v)
{
    return Matrix(v.size(), 1, std::vector<cplx>(v.begin(), v.end()));
}

CVector Matrix::col(std::size_t j) const
{
    CVector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_col(std::size_t j, std::span<const cplx> v)
{
    for (std::size_t i = 0; i < rows_; ++i)
        (*this)(i, j) = v[i];
}

Matrix Matrix::adjoint() const
{
    Matrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            m(j, i) = std::conj((*this)(i, j));
    return m;
}

Matrix Matrix::transpose() const
{
    Matrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            m(j, i) = (*this)(i, j);
    return m;
}

Matrix Matrix::conj() const
{
    Matrix m = *this;
    for (auto& x : m.data_)
        x = std::conj(x);
    return m;
}

cplx Matrix::trace() const
{
    cplx t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i)
        t += (*this)(i, i);
    return t;
}

double Matrix::frobenius() const
{
    double s = 0.0;
    for (const auto& x : data_)
        s += std::norm(x);
    return std::sqrt(s);
}

double Matrix::norm() const
{
    if (data_.empty())
        return 0.0;
    const Matrix g = rows_ >= cols_ ? adjoint() * (*this) : (*this) * adjoint();
    const auto es = hermitian_eigen(g);
    return std::sqrt(std::max(0.0, es.values.back()));
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const
{
    if (r0 + nr > rows_ || c0 + nc > cols_)
        throw Error(ErrorKind::IndexOutOfRange, "block outside matrix");
    Matrix m(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j)
            m(i, j) = (*this)(r0 + i, c0 + j);
    return m;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b)
{
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
        throw Error(ErrorKind::IndexOutOfRange, "block outside matrix");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            (*this)(r0 + i, c0 + j) = b(i, j);
}

Matrix& Matrix::operator+=(const Matrix& o)
{
    if (rows_ != o.rows_ || cols_ != o.cols_)
        throw Error(ErrorKind::DimensionMismatch, "matrix sum");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o)
{
    if (rows_ != o.rows_ || cols_ != o.cols_)
        throw Error(ErrorKind::DimensionMismatch, "matrix difference");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(cplx s)
{
    for (auto& x : data_)
        x *= s;
    return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b)
{
    if (a.cols_ != b.rows_)
        throw Error(ErrorKind::DimensionMismatch, "matrix product");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{})
                continue;
            for (std::size_t j = 0; j < b.cols_; ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

CVector operator*(const Matrix& a, std::span<const cplx> v)
{
    if (a.cols_ != v.size())
        throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
    CVector out(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t j = 0; j < a.cols_; ++j)
            out[i] += a(i, j) * v[j];
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix m(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    m(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return m;
}

Matrix direct_sum(const Matrix& a, const Matrix& b)
{
    Matrix m(a.rows() + b.rows(), a.cols() + b.cols());
    m.set_block(0, 0, a);
    m.set_block(a.rows(), a.cols(), b);
    return m;
}

cplx inner(std::span<const cplx> u, std::span<const cplx> v)
{
    if (u.size() != v.size())
        throw Error(ErrorKind::DimensionMismatch, "inner product");
    cplx s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        s += std::conj(u[i]) * v[i];
    return s;
}

double norm2(std::span<const cplx> v)
{
    return std::sqrt(std::real(inner(v, v)));
}

cplx hs_inner(const Matrix& a, const Matrix& b)
{
    return inner(a.data(), b.data());
}

double max_abs_diff(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(ErrorKind::DimensionMismatch, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

Matrix inverse(const Matrix& a)
{
    if (!a.square())
        throw Error(ErrorKind::DimensionMismatch, "inverse of non-square matrix");
    const std::size_t n = a.rows();
    Matrix w = a;
    Matrix inv = Matrix::identity(n);
    const double scale = std::max(1e-300, a.frobenius());
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(w(r, c)) > std::abs(w(piv, c)))
                piv = r;
        if (std::abs(w(piv, c)) <= 1e-14 * scale)
            throw Error(ErrorKind::SingularSystem, "matrix is numerically singular");
        if (piv != c)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(w(c, j), w(piv, j));
                std::swap(inv(c, j), inv(piv, j));
            }
        const cplx d = w(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            w(c, j) /= d;
            inv(c, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || w(r, c) == cplx{})
                continue;
            const cplx f = w(r, c);
            for (std::size_t j = 0; j < n; ++j) {
                w(r, j) -= f * w(c, j);
                inv(r, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

bool is_hermitian(const Matrix& m, double tol)
{
    if (!m.square())
        return false;
    return (m - m.adjoint()).frobenius() <= tol * std::max(1.0, m.frobenius());
}

double min_eigenvalue(const Matrix& m)
{
    return hermitian_eigen(m).values.front();
}

bool is_psd(const Matrix& m, double tol)
{
    if (!is_hermitian(m, tol))
        return false;
    if (m.empty())
        return true;
    return min_eigenvalue(m) >= -tol * std::max(1.0, m.frobenius());
}

bool is_projection(const Matrix& m, double tol)
{
    if (!is_hermitian(m, tol))
        return false;
    const auto es = hermitian_eigen(m);
    return std::all_of(es.values.begin(), es.values.end(), [tol](double v) {
        return std::abs(v) <= tol || std::abs(v - 1.0) <= tol;
    });
}

EigenSystem hermitian_eigen(const Matrix& input, double tol)
{
    if (!input.square())
        throw Error(ErrorKind::NotHermitian, "non-square input");
    if (!is_hermitian(input, 1e-9))
        throw Error(ErrorKind::NotHermitian, "input fails the Hermitian predicate");
    const std::size_t n = input.rows();
    Matrix a = 0.5 * (input + input.adjoint());
    Matrix v = Matrix::identity(n);

    const double scale = std::max(a.frobenius(), 1e-300);
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j)
                    s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > tol * scale; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-300 || mag <= 1e-18 * scale)
                    continue;
                const cplx phase = apq / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // G = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                const cplx gpp = c;
                const cplx gpq = s;
                const cplx gqp = -s * std::conj(phase);
                const cplx gqq = c * std::conj(phase);
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx aip = a(i, p);
                    const cplx aiq = a(i, q);
                    a(i, p) = aip * gpp + aiq * gqp;
                    a(i, q) = aip * gpq + aiq * gqq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const cplx apj = a(p, j);
                    const cplx aqj = a(q, j);
                    a(p, j) = std::conj(gpp) * apj + std::conj(gqp) * aqj;
                    a(q, j) = std::conj(gpq) * apj + std::conj(gqq) * aqj;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx vip = v(i, p);
                    const cplx viq = v(i, q);
                    v(i, p) = vip * gpp + viq * gqp;
                    v(i, q) = vip * gpq + viq * gqq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });
    EigenSystem es;
    es.values.resize(n);
    es.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        es.values[k] = a(order[k], order[k]).real();
        for (std::size_t i = 0; i < n; ++i)
            es.vectors(i, k) = v(i, order[k]);
    }
    return es;
}

Matrix orthonormal_range(const Matrix& cols, double rel_tol)
{
    double scale = 0.0;
    for (std::size_t j = 0; j < cols.cols(); ++j)
        scale = std::max(scale, norm2(cols.col(j)));
    std::vector<CVector> basis;
    for (std::size_t j = 0; j < cols.cols(); ++j) {
        CVector v = cols.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                const cplx c = inner(b, v);
                for (std::size_t i = 0; i < v.size(); ++i)
                    v[i] -= c * b[i];
            }
        const double nv = norm2(v);
        if (nv > rel_tol * std::max(scale, 1e-300)) {
            for (auto& x : v)
                x /= nv;
            basis.push_back(std::move(v));
        }
    }
    Matrix out(cols.rows(), basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j)
        out.set_col(j, basis[j]);
    return out;
}

std::size_t numerical_rank(const Matrix& cols, double rel_tol)
{
    // Squared singular values from A*A lose everything below sqrt(eps), so orthogonalize directly.
    return orthonormal_range(cols, rel_tol).cols();
}

}  // namespace qw
