#include <cmath>
#include <random>

#include "doctest.h"
#include "qw/errors.hpp"
#include "qw/forms.hpp"
#include "qw/purity.hpp"
#include "test_helpers.hpp"

using namespace qw;

namespace {

CVector e(std::size_t k, std::size_t i)
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

WeightAtom canonical_along(CVector v)
{
    return WeightAtom(Canonical{}, std::move(v));
}

WeightAtom bounded_along(CVector v, double decay = 1.0)
{
    return WeightAtom(PowerExp{1.0, 0.0, decay}, std::move(v));
}

BoundaryWeight normalized(BoundaryWeight mu, const Matrix& t, double target = 1.0)
{
    const double n = weight_eval(mu, StructuredObservable::id_minus_lambda(t)).value;
    return mu.scaled(target / n);
}

void check_witness(const PurityVerdict& v)
{
    REQUIRE(v.witness);
    CHECK(v.witness_subordinate);
    CHECK_FALSE(v.witness_proportional);
    CHECK(validate(*v.witness).valid);
}

}  // namespace

TEST_CASE("mu_qpure_test examples")
{
    CHECK(mu_qpure_test(canonical_weight()) == Tristate::True);

    // Two unbounded atoms whose difference is square integrable.
    BoundaryWeight two(1);
    two.add(0.5, canonical_along({1.0}));
    two.add(0.5, WeightAtom::composite({{Canonical{}, {1.0}}, {PowerExp{1.0, 0.0, 1.0}, {1.0}}}));
    CHECK(mu_qpure_test(two) == Tristate::False);

    // A bounded atom next to an unbounded one.
    BoundaryWeight mixed(2);
    mixed.add(0.5, canonical_along(e(2, 0)));
    mixed.add(0.5, WeightAtom(PowerExp{1.0, -0.3, 1.0}, e(2, 1)));
    CHECK(mu_qpure_test(mixed) == Tristate::False);

    // Unbounded atoms with independent singular directions.
    BoundaryWeight indep(2);
    indep.add(0.5, canonical_along(e(2, 0)));
    indep.add(0.5, canonical_along(e(2, 1)));
    CHECK(mu_qpure_test(indep) == Tristate::True);

    // Repeated atoms count once.
    BoundaryWeight repeated(1);
    repeated.add(0.2, bounded_along({1.0}));
    repeated.add(0.3, bounded_along({2.0}));
    CHECK(mu_qpure_test(repeated) == Tristate::True);

    BoundaryWeight grid(1);
    grid.add(0.3, WeightAtom(GridSampled{{0.0, 1.0, 2.0}, {1.0, 0.5, 0.0}}, {1.0}));
    CHECK(mu_qpure_test(grid) == Tristate::Unsupported);
}

TEST_CASE("classify: single unbounded atom over C is q-pure")
{
    const auto v = classify_rank_one(RankOne{Matrix::identity(1), canonical_weight()});
    CHECK(v.verdict == Verdict::QPure);
    CHECK(v.failed_condition == FailedCondition::None);
    CHECK_FALSE(v.witness);
}

TEST_CASE("classify: T not a projection")
{
    BoundaryWeight mu(2);
    mu.add(0.5, canonical_along(e(2, 0)));
    mu.add(1.0, bounded_along(e(2, 1)));
    const Matrix t = diag2(1.0, 0.5);
    REQUIRE(validate_rank_one(t, mu).valid);
    const auto v = classify_rank_one(RankOne{t, mu});
    CHECK(v.verdict == Verdict::NotQPure);
    CHECK(v.failed_condition == FailedCondition::TNotProjection);
    check_witness(v);
    // T1 = F([3/4, 1]) T = e11.
    CHECK(max_abs_diff(v.witness->rank_one()->t, diag2(1, 0)) < 1e-12);
}

TEST_CASE("classify: divergence along one direction only")
{
    // One composite atom: unbounded along e1, bounded along e2.
    BoundaryWeight mu(2);
    mu.add(1.0, WeightAtom::composite({{Canonical{}, e(2, 0)}, {PowerExp{0.5, 0.0, 2.0}, e(2, 1)}}));
    const Matrix id = Matrix::identity(2);
    mu = normalized(mu, id);
    const auto v = classify_rank_one(RankOne{id, mu});
    CHECK(v.verdict == Verdict::NotQPure);
    CHECK(v.failed_condition == FailedCondition::DivergenceRankDeficient);
    check_witness(v);
}

TEST_CASE("classify: cancelable singularities")
{
    BoundaryWeight mu(1);
    mu.add(0.5, canonical_along({1.0}));
    mu.add(0.5, WeightAtom::composite({{Canonical{}, {1.0}}, {PowerExp{1.0, 0.0, 1.0}, {1.0}}}));
    const Matrix one = Matrix::identity(1);
    mu = normalized(mu, one);
    const auto v = classify_rank_one(RankOne{one, mu});
    CHECK(v.verdict == Verdict::NotQPure);
    CHECK(v.failed_condition == FailedCondition::MuNotQPure);
    check_witness(v);
}

TEST_CASE("classification is unitarily invariant")
{
    std::mt19937_64 rng(5);
    BoundaryWeight mu_b(2);
    mu_b.add(0.5, canonical_along(e(2, 0)));
    mu_b.add(1.0, bounded_along(e(2, 1)));
    BoundaryWeight mu_c(2);
    mu_c.add(1.0, WeightAtom::composite({{Canonical{}, e(2, 0)}, {PowerExp{0.5, 0.0, 2.0}, e(2, 1)}}));
    mu_c = normalized(mu_c, Matrix::identity(2));
    BoundaryWeight mu_p(2);
    mu_p.add(0.5, canonical_along(e(2, 0)));
    mu_p.add(0.5, canonical_along(e(2, 1)));
    const RankOne cases[] = {{diag2(1, 0.5), mu_b}, {Matrix::identity(2), mu_c}, {Matrix::identity(2), mu_p}};
    const TGrid coarse{1e-4, 10.0, 8};
    for (const auto& c : cases) {
        const Verdict base = classify_rank_one(c, coarse).verdict;
        for (int n = 0; n < 20; ++n) {
            const Matrix u = qwtest::random_unitary(rng, 2);
            const RankOne conj{u * c.t * u.adjoint(), c.mu.transformed(u)};
            const auto v = classify_rank_one(conj, coarse);
            CHECK(v.verdict == base);
        }
    }
    CHECK(classify_rank_one(cases[2], coarse).verdict == Verdict::QPure);
}

TEST_CASE("build_subordinate_from_rho")
{
    BoundaryWeight mu(1);
    mu.add(0.6, canonical_along({1.0}));
    mu.add(1.0, bounded_along({1.0}, 1.5));
    const Matrix one = Matrix::identity(1);
    mu = normalized(mu, one);
    const QWeightMap omega = RankOne{one, mu};

    const QWeightMap same = build_subordinate_from_rho(omega, BoundaryWeight(1), 1.0);
    CHECK(weights_equal(same.rank_one()->mu, mu));
    const QWeightMap half = build_subordinate_from_rho(omega, BoundaryWeight(1), 0.5);
    CHECK(weights_equal(half.rank_one()->mu, mu.scaled(0.5)));

    // rho = the bounded part of mu.
    BoundaryWeight rho(1);
    rho.add(mu.terms()[1].lambda, mu.terms()[1].atom);
    const QWeightMap eta = build_subordinate_from_rho(omega, rho, 1.0);
    CHECK(subordination_check(omega, eta).holds);
    CHECK_FALSE(proportional_maps(omega, eta));

    BoundaryWeight too_big(1);
    too_big.add(2.0 * mu.terms()[1].lambda, mu.terms()[1].atom);
    CHECK_THROWS_AS(build_subordinate_from_rho(omega, too_big, 1.0), Error);

    // The pair (lambda, rho) is recovered from eta.
    const QWeightMap eta2 = build_subordinate_from_rho(omega, rho.scaled(0.5), 0.7);
    const auto p = recover_subordinate_parameters(omega, eta2);
    CHECK(p.lambda == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(weights_equal(p.rho, rho.scaled(0.5), 1e-6));
}

TEST_CASE("rank-two witnesses")
{
    BoundaryWeight mu1(2);
    mu1.add(0.5, canonical_along(e(2, 0)));
    mu1.add(0.1, canonical_along(e(2, 1)));
    BoundaryWeight mu2(2);
    mu2.add(0.1, canonical_along(e(2, 0)));
    mu2.add(0.5, canonical_along(e(2, 1)));
    const QWeightMap qw = RankTwo{diag2(1, 0), diag2(0, 1), mu1, mu2};
    const TGrid coarse{1e-5, 10.0, 10};
    const auto w = rank_two_witnesses(qw, coarse);
    CHECK(w.report.kappa1 == doctest::Approx(0.2));
    CHECK(w.report.eta_subordinate);
    CHECK(w.report.nu_subordinate);
    CHECK(w.report.incomparable);
    REQUIRE(w.report.eta_not_below_nu);
    CHECK(w.report.eta_not_below_nu->min_eigenvalue < 0);
    // eta = rho(e1)(mu1 - kappa1 mu2) = 0.48 P1.
    BoundaryWeight expect(2);
    expect.add(0.48, canonical_along(e(2, 0)));
    CHECK(weights_equal(w.eta.rank_one()->mu, expect));

    // Cross pairings vanish: kappa = 0 and the witnesses are the weights themselves.
    BoundaryWeight a(2);
    a.add(0.6, canonical_along(e(2, 0)));
    BoundaryWeight b(2);
    b.add(0.9, canonical_along(e(2, 1)));
    const auto w0 = rank_two_witnesses(RankTwo{diag2(1, 0), diag2(0, 1), a, b}, coarse);
    CHECK(w0.report.kappa1 == doctest::Approx(0.0));
    CHECK(weights_equal(w0.eta.rank_one()->mu, a));
    CHECK(w0.report.incomparable);

    CHECK_THROWS_AS(rank_two_witnesses(RankTwo{diag2(1, 0), diag2(0, 1), a, BoundaryWeight(2)}, coarse), Error);
    CHECK_THROWS_AS(rank_two_witnesses(RankTwo{diag2(1, 0), diag2(0, 1), a, a}, coarse), Error);
}
