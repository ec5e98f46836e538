#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "qw/matrix.hpp"

namespace qw {

// Linear map B(C^a) -> B(C^b) stored through its Choi matrix
// C[(i*b + r), (j*b + s)] = phi(E_ij)_{rs}.
class CPMap {
public:
    CPMap() = default;
    CPMap(std::size_t in_dim, std::size_t out_dim, Matrix choi);

    static CPMap from_function(std::size_t in_dim, std::size_t out_dim,
                               const std::function<Matrix(const Matrix&)>& f);
    // Inverse of superoperator(): rows indexed by vec(out), columns by vec(in), row-major vec.
    static CPMap from_superoperator(std::size_t in_dim, std::size_t out_dim, const Matrix& s);
    static CPMap identity(std::size_t n);
    static CPMap zero(std::size_t in_dim, std::size_t out_dim);

    std::size_t in_dim() const noexcept { return in_; }
    std::size_t out_dim() const noexcept { return out_; }
    const Matrix& choi() const noexcept { return choi_; }

    Matrix apply(const Matrix& x) const;
    Matrix superoperator() const;
    // (this o inner)(X) = this(inner(X)).
    CPMap after(const CPMap& inner) const;

    CPMap& operator+=(const CPMap& o);
    CPMap& operator-=(const CPMap& o);
    friend CPMap operator+(CPMap a, const CPMap& b) { return a += b; }
    friend CPMap operator-(CPMap a, const CPMap& b) { return a -= b; }
    friend CPMap operator*(double s, CPMap a)
    {
        a.choi_ *= s;
        return a;
    }

private:
    std::size_t in_ = 0;
    std::size_t out_ = 0;
    Matrix choi_;
};

bool is_completely_positive(const CPMap& phi, double tol = default_tol.psd);
// Operator norm of phi(I); throws NotCP when phi is not completely positive.
double cp_norm(const CPMap& phi, double tol = default_tol.psd);
// Completely positive, idempotent and of norm 0 or 1.
bool is_cp_idempotent_contraction(const CPMap& l, double tol = 1e-9);

// Orthogonal decomposition C^k = K_1 + K_2 + ... into consecutive coordinate blocks.
class BlockStructure {
public:
    explicit BlockStructure(std::vector<std::size_t> dims);

    std::size_t count() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t i) const;
    std::size_t offset(std::size_t i) const;
    std::size_t total() const noexcept { return total_; }

private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 0;
};

// Linear map on the d_i x d_j corner B(K_j, K_i), acting on row-major vectorizations.
struct CornerMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Matrix matrix;

    Matrix apply(const Matrix& x) const;
    bool is_zero(double tol = 1e-12) const;
};

// phi_ij(X) = [phi(X^{ij})]_{ij}, where X^{ij} places X in the (i, j) corner.
CornerMap block_component(const CPMap& phi, const BlockStructure& blocks, std::size_t i, std::size_t j);

// Map A -> [[s11(A) P1, s12(A) Q], [s21(A) Q*, s22(A) P2]] from B(K) into B(K + K).
CPMap assemble_block_map(const Matrix& p1, const Matrix& p2, const Matrix& q, const CPMap& sigma);

// Decides complete positivity of the assembled block map from the data alone.
bool extractor_check(const Matrix& p1, const Matrix& p2, const Matrix& q, const CPMap& sigma,
                     double tol = default_tol.psd);

}  // namespace qw
