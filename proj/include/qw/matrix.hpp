#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qw {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

// Dense row-major complex matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
    Matrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix diagonal(std::span<const double> d);
    static Matrix unit(std::size_t n, std::size_t i, std::size_t j);
    static Matrix outer(std::span<const cplx> u, std::span<const cplx> v);
    static Matrix column(std::span<const cplx> v);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const cplx> data() const noexcept { return data_; }
    std::span<cplx> data() noexcept { return data_; }
    CVector col(std::size_t j) const;
    void set_col(std::size_t j, std::span<const cplx> v);

    Matrix adjoint() const;
    Matrix transpose() const;
    Matrix conj() const;
    cplx trace() const;
    double frobenius() const;
    // Operator (spectral) norm.
    double norm() const;

    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(cplx s);

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, cplx s) { return a *= s; }
    friend Matrix operator*(cplx s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }
    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend CVector operator*(const Matrix& a, std::span<const cplx> v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

Matrix kron(const Matrix& a, const Matrix& b);
Matrix direct_sum(const Matrix& a, const Matrix& b);
cplx inner(std::span<const cplx> u, std::span<const cplx> v);
double norm2(std::span<const cplx> v);
// Frobenius inner product tr(a* b).
cplx hs_inner(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

struct Tolerances {
    double eig = 1e-12;
    double psd = 1e-9;
    double range = 1e-8;
    double cluster = 1e-7;
};

inline constexpr Tolerances default_tol{};

bool is_hermitian(const Matrix& m, double tol = default_tol.psd);
// PSD under the scaled threshold -tol * max(1, |M|_F) on the smallest eigenvalue.
bool is_psd(const Matrix& m, double tol = default_tol.psd);
double min_eigenvalue(const Matrix& m);
bool is_projection(const Matrix& m, double tol = default_tol.psd);

struct EigenSystem {
    std::vector<double> values;  // ascending
    Matrix vectors;              // columns
};

// Cyclic Jacobi for Hermitian matrices.
EigenSystem hermitian_eigen(const Matrix& m, double tol = default_tol.eig);

// Functional calculus on a Hermitian matrix.
template <class F>
Matrix hermitian_apply(const Matrix& m, F f)
{
    const auto es = hermitian_eigen(m);
    const std::size_t n = m.rows();
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double fk = f(es.values[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += fk * es.vectors(i, k) * std::conj(es.vectors(j, k));
    }
    return out;
}

// Orthonormal basis (columns) of the span of the given columns.
Matrix orthonormal_range(const Matrix& cols, double rel_tol);
std::size_t numerical_rank(const Matrix& cols, double rel_tol);

}  // namespace qw
