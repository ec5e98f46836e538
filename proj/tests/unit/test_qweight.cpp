#include <cmath>
#include <random>

#include "doctest.h"
#include "qw/errors.hpp"
#include "qw/forms.hpp"
#include "qw/qweight.hpp"
#include "test_helpers.hpp"

using namespace qw;

namespace {

// mu_0 restricted to [t, inf) applied to Lambda: -ln(1 - e^{-t}) - e^{-t}.
double powers_lambda_tail(double t)
{
    return -std::log(-std::expm1(-t)) - std::exp(-t);
}

CVector basis(std::size_t k, std::size_t i)
{
    CVector v(k);
    v[i] = 1.0;
    return v;
}

Matrix diag2(double a, double b)
{
    const double d[] = {a, b};
    return Matrix::diagonal(d);
}

// mu = a P1 + b P2 with P_j the canonical atom along e_j of C^2.
BoundaryWeight canonical_pair(double a, double b)
{
    BoundaryWeight mu(2);
    if (a > 0)
        mu.add(a, WeightAtom(Canonical{}, basis(2, 0)));
    if (b > 0)
        mu.add(b, WeightAtom(Canonical{}, basis(2, 1)));
    return mu;
}

QWeightMap diagonal_rank_two(double a, double b, double c, double d)
{
    return RankTwo{diag2(1, 0), diag2(0, 1), canonical_pair(a, b), canonical_pair(c, d)};
}

const TGrid kGrid{};

}  // namespace

TEST_CASE("grid is geometric and validated")
{
    const auto ts = kGrid.values();
    REQUIRE(ts.size() == 24);
    CHECK(ts.front() == doctest::Approx(1e-6));
    CHECK(ts.back() == doctest::Approx(10.0));
    for (std::size_t i = 2; i < ts.size(); ++i)
        CHECK(ts[i] / ts[i - 1] == doctest::Approx(ts[1] / ts[0]));
    CHECK_THROWS_AS(TGrid({1.0, 0.5, 24}).values(), Error);
    CHECK_THROWS_AS(TGrid({1e-3, 1.0, 4}).values(), Error);
}

TEST_CASE("validate_rank_one examples")
{
    const Matrix one = Matrix::identity(1);
    const auto r1 = validate_rank_one(one, canonical_weight());
    CHECK(r1.valid);
    CHECK(r1.unital);
    CHECK(r1.normalization == doctest::Approx(1.0).epsilon(1e-10));

    const auto r2 = validate_rank_one(one, canonical_weight().scaled(2.0));
    CHECK_FALSE(r2.valid);
    CHECK_FALSE(r2.reasons.empty());

    BoundaryWeight small(2);
    small.add(0.5, WeightAtom(PowerExp{1.0, 0.0, 1.0}, CVector{1.0, 1.0}));
    const auto r3 = validate_rank_one(diag2(1, 0.5), small);
    CHECK(r3.valid);
    CHECK_FALSE(r3.unital);

    CHECK_FALSE(validate_rank_one(diag2(1, -0.5), small).valid);
    CHECK_FALSE(validate_rank_one(diag2(0.5, 0.5), small).valid);
}

TEST_CASE("rank-one GBR coefficient matches the closed form")
{
    const QWeightMap qw = RankOne{Matrix::identity(1), canonical_weight()};
    for (double t : {1e-4, 0.01, 1.0, 3.0})
        CHECK(rank_one_coefficient(qw, t) == doctest::Approx(1.0 / (1.0 + powers_lambda_tail(t))).epsilon(1e-10));

    BoundaryWeight bounded(1);
    bounded.add(0.3, WeightAtom(PowerExp{1.0, 1.0, 0.5}, CVector{1.0}));
    const QWeightMap qb = RankOne{Matrix::identity(1), bounded};
    CHECK(rank_one_coefficient(qb, 200.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unified GBR agrees with the rank-one formula")
{
    std::mt19937_64 rng(7);
    BoundaryWeight mu(2);
    mu.add(0.2, WeightAtom(Canonical{}, CVector{1.0, cplx(0.0, 1.0)}));
    mu.add(0.1, WeightAtom(PowerExp{1.0, -0.25, 2.0}, CVector{0.3, 1.0}));
    const Matrix t = diag2(1.0, 0.4);
    const QWeightMap qw = RankOne{t, mu};
    for (double tt : {1e-5, 0.05, 2.0}) {
        const GBRSample s = gbr(qw, tt);
        const double c = rank_one_coefficient(qw, tt);
        for (int n = 0; n < 4; ++n) {
            const Matrix m = qwtest::random_hermitian(rng, 2);
            for (Kernel k : {Kernel::One, Kernel::ExpNeg}) {
                const Matrix got = s.apply({{m, k}});
                const cplx mv = weight_value(mu, {{m, k}}, {tt, kInfinity});
                CHECK(max_abs_diff(got, c * mv * t) < 1e-10);
            }
        }
        CHECK(s.is_cp());
    }
}

TEST_CASE("rank-two GBR agrees with the explicit 2x2 solution")
{
    const QWeightMap qw = diagonal_rank_two(0.5, 0.1, 0.1, 0.5);
    const auto* r = qw.rank_two();
    std::mt19937_64 rng(11);
    for (double t : {1e-6, 1e-2, 1.0}) {
        const RankTwoSystem sys = rank_two_system(qw, t);
        const double l = powers_lambda_tail(t);
        CHECK(sys.x[0][0] == doctest::Approx(0.5 * l).epsilon(1e-10));
        CHECK(sys.x[0][1] == doctest::Approx(0.1 * l).epsilon(1e-10));
        CHECK(sys.h1 == doctest::Approx(0.1 * l / (1 + 0.5 * l)).epsilon(1e-10));
        const GBRSample s = gbr(qw, t);
        for (int n = 0; n < 3; ++n) {
            const Matrix m = qwtest::random_hermitian(rng, 2);
            const cplx m1 = weight_value(r->mu1, {{m, Kernel::One}}, {t, kInfinity});
            const cplx m2 = weight_value(r->mu2, {{m, Kernel::One}}, {t, kInfinity});
            const cplx l1 = sys.inverse[0][0] * m1 + sys.inverse[0][1] * m2;
            const cplx l2 = sys.inverse[1][0] * m1 + sys.inverse[1][1] * m2;
            CHECK(max_abs_diff(s.apply({{m, Kernel::One}}), l1 * r->e1 + l2 * r->e2) < 1e-10);
        }
    }
}

TEST_CASE("rank-two GBR special cases")
{
    // Equal weights collapse to mu|_t / (1 + mu|_t(Lambda(e1 + e2))).
    BoundaryWeight mu(2);
    mu.add(0.3, WeightAtom(Canonical{}, CVector{1.0, 1.0}));
    const QWeightMap eq = RankTwo{diag2(1, 0), diag2(0, 1), mu, mu};
    const Matrix m{{1.0, 0.2}, {0.2, 0.5}};
    for (double t : {1e-3, 0.5}) {
        const RankTwoSystem sys = rank_two_system(eq, t);
        const double denom = 1.0 + weight_value(mu, {{Matrix::identity(2), Kernel::ExpNeg}}, {t, kInfinity}).real();
        const cplx mv = weight_value(mu, {{m, Kernel::One}}, {t, kInfinity});
        CHECK(std::abs((sys.inverse[0][0] + sys.inverse[0][1]) * mv - mv / denom) < 1e-12);
        CHECK(std::abs((sys.inverse[1][0] + sys.inverse[1][1]) * mv - mv / denom) < 1e-12);
    }
    // A single weight reduces to the rank-one formula in e1.
    const QWeightMap lone = RankTwo{diag2(1, 0), diag2(0, 1), canonical_pair(0.4, 0), BoundaryWeight(2)};
    const QWeightMap r1 = RankOne{diag2(1, 0), canonical_pair(0.4, 0)};
    const RankTwoSystem sys = rank_two_system(lone, 0.01);
    CHECK(sys.inverse[0][0] == doctest::Approx(rank_one_coefficient(r1, 0.01)).epsilon(1e-12));
    // Large t: X -> 0.
    const RankTwoSystem far = rank_two_system(diagonal_rank_two(0.5, 0.1, 0.1, 0.5), 40.0);
    CHECK(far.inverse[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(far.inverse[0][1]) < 1e-12);
}

TEST_CASE("GBR inverts back to the truncated dualized map")
{
    // breve|_t = sum_n (pi Lambda)^n pi, truncated once terms fall below 1e-14.
    BoundaryWeight mu(2);
    mu.add(0.25, WeightAtom(Canonical{}, CVector{1.0, 0.5}));
    mu.add(0.2, WeightAtom(PowerExp{1.0, 0.5, 1.0}, CVector{0.0, 1.0}));
    const QWeightMap maps[] = {QWeightMap(RankOne{diag2(1, 0.6), mu}), diagonal_rank_two(0.3, 0.2, 0.05, 0.6)};
    for (const auto& qw : maps) {
        const FiniteForm form = finite_form(qw);
        for (double t : {1e-3, 0.3, 2.0}) {
            const GBRSample s = gbr(qw, t);
            const Matrix m{{0.7, cplx(0.1, 0.3)}, {cplx(0.1, -0.3), -0.2}};
            const std::vector<OperatorTerm> obs{{m, Kernel::One}, {Matrix::identity(2), Kernel::ExpNeg}};
            Matrix term = s.apply(obs);
            Matrix total = term;
            for (int n = 0; n < 2000 && term.frobenius() > 1e-14; ++n) {
                term = s.apply({{term, Kernel::ExpNeg}});
                total += term;
            }
            const Matrix direct = dualized(form, obs, {t, kInfinity});
            CHECK(max_abs_diff(total, direct) < 1e-8 * std::max(1.0, direct.frobenius()));
        }
    }
}

TEST_CASE("valid rank-one maps give CP contractions on the grid")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const Matrix v = qwtest::random_unitary(rng, 2);
        const double d[] = {1.0, u(rng)};
        const Matrix t = v * Matrix::diagonal(d) * v.adjoint();
        BoundaryWeight mu(2);
        mu.add(u(rng), WeightAtom(Canonical{}, qwtest::random_matrix(rng, 2, 1).col(0)));
        mu.add(u(rng), WeightAtom(PowerExp{1.0, -0.3, 0.5 + u(rng)}, qwtest::random_matrix(rng, 2, 1).col(0)));
        const double n = weight_eval(mu, StructuredObservable::id_minus_lambda(t)).value;
        mu = mu.scaled(u(rng) / n);
        REQUIRE(validate_rank_one(t, mu).valid);
        const GridCertificate cert = certify_gbr(RankOne{t, mu});
        CHECK(cert.holds);
        CHECK(cert.max_norm <= 1.0 + 1e-9);
    }
}

TEST_CASE("validate_rank_two on diagonal canonical families")
{
    // kappa1 = b/d, kappa2 = c/a, x = a + b, y = c + d.
    const auto r = validate_rank_two(diagonal_rank_two(0.5, 0.1, 0.1, 0.5));
    CHECK(r.valid);
    CHECK(r.kappa1 == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(r.kappa2 == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(r.x == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(r.h_monotone);
    CHECK(r.det_at_least_one);
    CHECK(r.kappa1_grid <= r.kappa1 + 1e-12);
    CHECK_FALSE(r.sampled_only);

    // Orthogonal supports: kappa = 0 and the parallelogram is the unit square.
    const auto sq = validate_rank_two(diagonal_rank_two(0.8, 0, 0, 1.0));
    CHECK(sq.valid);
    CHECK(sq.kappa1 == doctest::Approx(0.0));
    CHECK(sq.kappa2 == doctest::Approx(0.0));
    CHECK_FALSE(validate_rank_two(diagonal_rank_two(1.2, 0, 0, 1.0)).valid);

    // ad - bc = 0.72 exceeds d - b = 0.6.
    const auto out = validate_rank_two(diagonal_rank_two(0.9, 0.3, 0.3, 0.9));
    CHECK_FALSE(out.valid);
    CHECK_FALSE(out.in_parallelogram);
    CHECK(out.kappa_inequalities);

    // ad < bc breaks mu1 >= kappa1 mu2.
    const auto dom = validate_rank_two(diagonal_rank_two(0.1, 0.3, 0.3, 0.2));
    CHECK_FALSE(dom.valid);

    // Equal weights force kappa = 1 and x = y.
    const auto eq = validate_rank_two(diagonal_rank_two(0.5, 0.5, 0.5, 0.5));
    CHECK(eq.kappa1 == doctest::Approx(1.0));
    CHECK(eq.valid);
    CHECK_FALSE(validate_rank_two(diagonal_rank_two(0.7, 0.7, 0.7, 0.7)).valid);

    // Structural failure: e1 + e2 > I.
    const QWeightMap bad = RankTwo{diag2(1, 0), diag2(1, 1), canonical_pair(0.1, 0), canonical_pair(0, 0.1)};
    const auto b = validate_rank_two(bad);
    CHECK_FALSE(b.structural);
    CHECK_FALSE(b.valid);
}

TEST_CASE("subordination of scaled maps")
{
    const QWeightMap omega = RankOne{Matrix::identity(1), canonical_weight()};
    for (double lambda : {0.0, 0.25, 0.5, 1.0}) {
        const QWeightMap eta = RankOne{Matrix::identity(1), canonical_weight().scaled(lambda)};
        CHECK(subordination_check(omega, eta).holds);
    }
    const QWeightMap over = RankOne{Matrix::identity(1), canonical_weight().scaled(1.5)};
    const auto res = subordination_check(omega, over);
    CHECK_FALSE(res.holds);
    REQUIRE(res.first_failure);
    CHECK(res.first_failure->min_eigenvalue < 0.0);
    // Reflexive, and the smaller map is not above the larger.
    CHECK(subordination_check(omega, omega).holds);
    const QWeightMap half = RankOne{Matrix::identity(1), canonical_weight().scaled(0.5)};
    CHECK_FALSE(subordination_check(half, omega).holds);
}

TEST_CASE("rank-one subordinate bound")
{
    // omega = (T = I, mu = mu0 e1 + theta e2) with theta bounded; eta = (T1 = e11, lambda mu).
    BoundaryWeight mu(2);
    mu.add(0.5, WeightAtom(Canonical{}, basis(2, 0)));
    mu.add(1.0, WeightAtom(PowerExp{1.0, 0.0, 1.0}, basis(2, 1)));
    const QWeightMap omega = RankOne{Matrix::identity(2), mu};
    REQUIRE(validate(omega).valid);
    // mu(Lambda(e22)) = int e^{-3x} = 1/3, bound = 3/4.
    const double bound = 1.0 / (1.0 + weight_eval(mu, StructuredObservable::lambda(diag2(0, 1))).value);
    CHECK(bound == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(subordination_check(omega, RankOne{diag2(1, 0), mu.scaled(bound - 1e-3)}).holds);
    CHECK_FALSE(subordination_check(omega, RankOne{diag2(1, 0), mu.scaled(bound + 1e-2)}).holds);
}

TEST_CASE("normal spine")
{
    const auto s0 = normal_spine_trivial(RankOne{Matrix::identity(1), canonical_weight()});
    CHECK(s0.trivial);
    CHECK(s0.analytic);
    for (std::size_t i = 1; i < s0.evidence.size() && s0.evidence[i].t <= s0.cut; ++i)
        CHECK(s0.evidence[i].value >= s0.evidence[i - 1].value - 1e-12);
    // Evidence at t < 1 equals c(t) mu0|_1(I) = -ln(1 - e^{-1}) / (1 + L(t)).
    const double t0 = s0.evidence.front().t;
    CHECK(s0.evidence.front().value
          == doctest::Approx(-std::log(-std::expm1(-1.0)) / (1.0 + powers_lambda_tail(t0))).epsilon(1e-9));

    BoundaryWeight bounded(1);
    bounded.add(0.5, WeightAtom(PowerExp{1.0, 0.0, 1.0}, CVector{1.0}));
    CHECK_FALSE(normal_spine_trivial(RankOne{Matrix::identity(1), bounded}).trivial);

    CHECK(normal_spine_trivial(diagonal_rank_two(0.5, 0.1, 0.1, 0.5)).trivial);
    CHECK_FALSE(normal_spine_trivial(diagonal_rank_two(0.5, 0.0, 0.0, 0.0)).trivial);
}

TEST_CASE("weight domination and decomposition")
{
    const BoundaryWeight mu = canonical_pair(0.5, 0.2);
    const BoundaryWeight nu = canonical_pair(0.1, 0.4);
    CHECK(dominates(mu, nu, 0.5).holds);
    CHECK_FALSE(dominates(mu, nu, 0.6).holds);
    const BoundaryWeight diff = weight_difference(mu, nu, 0.5);
    const Matrix m{{0.3, 0.1}, {0.1, 0.9}};
    const cplx lhs = weight_value(diff, {{m, Kernel::One}}, {0.2, kInfinity});
    const cplx rhs = weight_value(mu, {{m, Kernel::One}}, {0.2, kInfinity})
                   - 0.5 * weight_value(nu, {{m, Kernel::One}}, {0.2, kInfinity});
    CHECK(std::abs(lhs - rhs) < 1e-10);
    CHECK_THROWS_AS(weight_difference(mu, nu, 0.6), Error);

    // Same weight written with different atoms; the unnormalized vectors carry a factor 2.
    BoundaryWeight split(2);
    split.add(0.125, WeightAtom(Canonical{}, CVector{1.0, 1.0}));
    split.add(0.125, WeightAtom(Canonical{}, CVector{1.0, -1.0}));
    CHECK(weights_equal(split, canonical_pair(0.25, 0.25)));
    const auto s = proportionality_factor(canonical_pair(0.25, 0.25), split.scaled(3.0));
    REQUIRE(s);
    CHECK(*s == doctest::Approx(3.0));
    CHECK_FALSE(proportionality_factor(mu, nu));
}
