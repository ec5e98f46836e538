#include <cmath>
#include <random>

#include "doctest.h"
#include "qw/cp_map.hpp"
#include "qw/errors.hpp"
#include "qw/flowsim.hpp"
#include "test_helpers.hpp"

using namespace qw;

namespace {

const Matrix one = Matrix::identity(1);

QWeightMap canonical_map()
{
    return RankOne{one, canonical_weight()};
}

QWeightMap bounded_map()
{
    // |e^{-x}|^2 (1 - e^{-x}) integrates to 1/6.
    return RankOne{one, BoundaryWeight(1, {{6.0, WeightAtom(PowerExp{1.0, 0.0, 1.0}, {1.0})}})};
}

Matrix block_matrix(const DiscretizedH& h, const BlockDiagonal& b)
{
    Matrix out(h.size(), h.size());
    for (std::size_t j = 0; j < h.m(); ++j)
        for (std::size_t a = 0; a < h.k(); ++a)
            for (std::size_t c = 0; c < h.k(); ++c)
                out(j * h.k() + a, j * h.k() + c) = b[j](a, c);
    return out;
}

Matrix dense_from_blocks(const DiscretizedH& h, const std::vector<Matrix>& blocks)
{
    return block_matrix(h, blocks);
}

}  // namespace

TEST_CASE("gamma of the identity approaches I - Lambda")
{
    double prev = 0.0;
    for (const std::size_t m : {200u, 400u}) {
        const DiscretizedH h(1, m, 20.0);
        const Matrix g = gamma_disc(h, Matrix::identity(m));
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            err = std::max(err, std::abs(g(j, j).real() - (1.0 - std::exp(-h.point(j)))));
        CHECK(err < 0.06);
        if (prev > 0.0)
            CHECK(err < 0.6 * prev);
        prev = err;
    }
    const DiscretizedH h(2, 5);
    CHECK(gamma_disc(h, Matrix(10, 10)).frobenius() == 0.0);
}

TEST_CASE("gamma is completely positive for small grids")
{
    for (std::size_t m = 1; m <= 12; ++m) {
        const DiscretizedH h(1, m, 3.0);
        const CPMap g = CPMap::from_function(m, m, [&](const Matrix& a) { return gamma_disc(h, a); });
        CHECK(is_completely_positive(g));
    }
    const DiscretizedH h(2, 4, 3.0);
    const CPMap g = CPMap::from_function(8, 8, [&](const Matrix& a) { return gamma_disc(h, a); });
    CHECK(is_completely_positive(g));
}

TEST_CASE("block-diagonal gamma agrees with the dense one")
{
    std::mt19937_64 rng(2);
    const DiscretizedH h(2, 30, 5.0);
    BlockDiagonal b;
    for (std::size_t j = 0; j < h.m(); ++j)
        b.push_back(qwtest::random_hermitian(rng, 2));
    CHECK(max_abs_diff(block_matrix(h, gamma_disc(h, b)), gamma_disc(h, block_matrix(h, b))) < 1e-13);
}

TEST_CASE("shift relation on grid multiples")
{
    const DiscretizedH h(2, 12, 6.0);
    const Matrix s = h.shift();
    Matrix power = Matrix::identity(h.size());
    for (std::size_t n = 0; n <= 12; ++n) {
        CHECK(max_abs_diff(h.tail_projection(n * h.step()), power * power.adjoint()) == 0.0);
        power = s * power;
    }
}

TEST_CASE("resolvent from a weight")
{
    std::mt19937_64 rng(9);
    const DiscretizedH h(1, 40, 8.0);
    const Matrix eta = [&] {
        const Matrix a = qwtest::random_matrix(rng, 40, 1);
        Matrix p = a * a.adjoint();
        return (1.0 / p.trace().real()) * p;
    }();

    // omega = 0 leaves the shift resolvent.
    const QWeightMap zero = RankOne{one, BoundaryWeight(1)};
    const Matrix r0 = resolvent_from_weight(h, zero, eta);
    for (int n = 0; n < 3; ++n) {
        const Matrix a = qwtest::random_hermitian(rng, 40);
        CHECK(std::abs((r0 * a).trace() - (eta * gamma_disc(h, a)).trace()) < 1e-12);
    }

    const Matrix r = resolvent_from_weight(h, canonical_map(), eta);
    CHECK(is_psd(r));

    const Matrix eta2 = (1.0 / 40.0) * Matrix::identity(40);
    const Matrix lin = resolvent_from_weight(h, canonical_map(), 0.3 * eta + 0.7 * eta2);
    CHECK(max_abs_diff(lin, 0.3 * r + 0.7 * resolvent_from_weight(h, canonical_map(), eta2)) < 1e-12);

    CHECK_THROWS_AS(resolvent_from_weight(h, canonical_map(), Matrix::identity(3)), Error);
}

TEST_CASE("recovery agrees with the dense resolvent")
{
    const DiscretizedH h(1, 60, 6.0);
    const Matrix rho = one;
    const auto obs = StructuredObservable::id(1);
    const double x = 1.0;
    const auto rec = recover_omega(h, canonical_map(), rho, x, obs);
    // Same quantity through the dense resolvent density.
    const Matrix eta = dense_from_blocks(h, pullback_blocks(h, rho, Pullback::Concentrated));
    const Matrix r = resolvent_from_weight(h, canonical_map(), eta);
    const Matrix t = h.tail_projection(x);
    const Matrix s = h.shift();
    const Matrix b = (1.0 / h.step()) * (t - std::exp(-h.step()) * s * t * s.adjoint());
    const double dense = ((r * b).trace() - (eta * gamma_disc(h, b)).trace()).real();
    CHECK(rec.recovered == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("recovering omega from the resolvent")
{
    const double x = 1.0;
    const auto obs = StructuredObservable::id(1);
    for (const QWeightMap& qw : {canonical_map(), bounded_map()}) {
        const auto coarse = recover_omega(DiscretizedH(1, 2000, 20.0), qw, one, x, obs);
        const auto fine = recover_omega(DiscretizedH(1, 4000, 20.0), qw, one, x, obs);
        CHECK(coarse.rel_err < 0.02);
        CHECK(fine.rel_err * 1.5 <= coarse.rel_err);
        const auto spread = recover_omega(DiscretizedH(1, 2000, 20.0), qw, one, x, obs, Pullback::Spread);
        CHECK(spread.recovered == doctest::Approx(coarse.recovered).epsilon(1e-12));
    }
    const auto c = recover_omega(DiscretizedH(1, 2000, 20.0), canonical_map(), one, x, obs);
    CHECK(c.direct == doctest::Approx(-std::log(-std::expm1(-1.0))).epsilon(1e-12));

    const auto lam = recover_omega(DiscretizedH(1, 2000, 20.0), canonical_map(), one, 0.5,
                                   StructuredObservable::lambda(one));
    CHECK(lam.rel_err < 0.02);

    const QWeightMap zero = RankOne{one, BoundaryWeight(1)};
    CHECK(recover_omega(DiscretizedH(1, 100, 20.0), zero, one, x, obs).recovered == 0.0);
    CHECK_THROWS_AS(recover_omega(DiscretizedH(1, 100, 20.0), canonical_map(), one, 0.13, obs), Error);
}

TEST_CASE("horizon warnings")
{
    CHECK(horizon_warnings(canonical_map()).empty());
    const QWeightMap slow = RankOne{one, BoundaryWeight(1, {{1.0, WeightAtom(PowerExp{1.0, 0.0, 0.1}, {1.0})}})};
    CHECK(horizon_warnings(slow).size() == 1);
}
