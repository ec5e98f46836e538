#pragma once

#include <random>

#include "qw/matrix.hpp"

namespace qwtest {

inline qw::Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c)
{
    std::normal_distribution<double> n;
    qw::Matrix m(r, c);
    for (auto& x : m.data())
        x = qw::cplx(n(rng), n(rng));
    return m;
}

inline qw::Matrix random_hermitian(std::mt19937_64& rng, std::size_t n)
{
    const qw::Matrix a = random_matrix(rng, n, n);
    return 0.5 * (a + a.adjoint());
}

inline qw::Matrix random_unitary(std::mt19937_64& rng, std::size_t n)
{
    return qw::orthonormal_range(random_matrix(rng, n, n), 1e-12);
}

}  // namespace qwtest
