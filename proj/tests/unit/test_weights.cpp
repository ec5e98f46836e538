#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <random>

#include "doctest.h"
#include "qw/errors.hpp"
#include "qw/special.hpp"
#include "qw/weights.hpp"

using namespace qw;

namespace {

double powers_tail(double t)
{
    return -std::log(-std::expm1(-t));
}

// Independent quadrature of conj(g1) g2 w on [t, inf) for real profiles.
double oracle_pair(const std::function<double(double)>& g1, const std::function<double(double)>& g2,
                   const std::function<double(double)>& w, double t)
{
    const auto f = [&](double x) { return g1(x) * g2(x) * w(x); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double mid = std::max(t, 1.0);
    double v = es.integrate(f, mid, std::numeric_limits<double>::infinity());
    if (t < 1.0)
        v += ts.integrate(f, t, 1.0);
    return v;
}

double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(1e-300, std::abs(b));
}

}  // namespace

TEST_CASE("upper incomplete gamma against an independent implementation")
{
    for (double a : {0.1, 0.5, 1.0, 2.5, 7.0, 20.0})
        for (double x : {1e-8, 1e-3, 0.2, 1.0, 3.0, 10.0, 50.0}) {
            const double ours = upper_gamma(a, x);
            const double ref = boost::math::tgamma(a, x);
            CHECK(rel_err(ours, ref) < 1e-12);
        }
    for (double x : {1e-10, 1e-4, 0.5, 1.0, 5.0, 40.0})
        CHECK(rel_err(expint_e1(x), boost::math::expint(1, x)) < 1e-12);
    // Negative a via the recurrence: Gamma(-1/2, x) = 2 (x^{-1/2} e^{-x} - Gamma(1/2, x)).
    for (double x : {1e-6, 0.3, 2.0, 15.0}) {
        const double ref = 2.0 * (std::exp(-x) / std::sqrt(x) - boost::math::tgamma(0.5, x));
        CHECK(rel_err(upper_gamma(-0.5, x), ref) < 1e-11);
    }
    CHECK(upper_gamma(3.0, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("adaptive Simpson on smooth integrands")
{
    CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(adaptive_simpson([](double x) { return std::exp(-x * x); }, -6.0, 6.0) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-11));
}

TEST_CASE("canonical profile closed forms")
{
    const Profile g = Canonical{};
    for (double t : {1e-6, 1e-3, 0.01, 0.1, 1.0, 3.0, 10.0}) {
        const auto one = pair_integral(g, g, Kernel::One, {t, kInfinity});
        const auto lam = pair_integral(g, g, Kernel::ExpNeg, {t, kInfinity});
        CHECK(rel_err(one.value.real(), powers_tail(t)) < 1e-12);
        CHECK(rel_err(lam.value.real(), powers_tail(t) - std::exp(-t)) < 1e-12);
    }
    const auto norm = pair_integral(g, g, Kernel::OneMinusExp, {0.0, kInfinity});
    CHECK(norm.value.real() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(pair_integral(g, g, Kernel::One, {0.0, kInfinity}).infinite);
}

TEST_CASE("power-exponential pairings against quadrature")
{
    struct Case {
        double p1, s1, p2, s2;
    };
    const Case cases[] = {{0.0, 1.0, 0.0, 1.0}, {-0.25, 0.5, 0.3, 2.0}, {-0.5, 1.0, -0.5, 2.0}, {1.5, 0.2, 0.0, 0.3}};
    for (const auto& c : cases)
        for (Kernel k : {Kernel::One, Kernel::ExpNeg, Kernel::OneMinusExp})
            for (double t : {1e-4, 0.1, 1.0, 5.0}) {
                const Profile g1 = PowerExp{1.0, c.p1, c.s1};
                const Profile g2 = PowerExp{1.0, c.p2, c.s2};
                const double ours = pair_integral(g1, g2, k, {t, kInfinity}).value.real();
                const auto w = [k](double x) {
                    return k == Kernel::One ? 1.0 : (k == Kernel::ExpNeg ? std::exp(-x) : -std::expm1(-x));
                };
                const double ref = oracle_pair([&](double x) { return std::pow(x, c.p1) * std::exp(-c.s1 * x); },
                                               [&](double x) { return std::pow(x, c.p2) * std::exp(-c.s2 * x); }, w, t);
                CHECK(rel_err(ours, ref) < 1e-9);
            }
}

TEST_CASE("mixed canonical and power-exponential pairings use quadrature")
{
    const Profile g1 = Canonical{};
    const Profile g2 = PowerExp{2.0, -0.3, 0.7};
    for (Kernel k : {Kernel::One, Kernel::ExpNeg, Kernel::OneMinusExp})
        for (double t : {0.0, 1e-6, 0.05, 2.0}) {
            if (t == 0.0 && k != Kernel::OneMinusExp)
                continue;
            const double ours = pair_integral(g1, g2, k, {t, kInfinity}).value.real();
            const auto w = [k](double x) {
                return k == Kernel::One ? 1.0 : (k == Kernel::ExpNeg ? std::exp(-x) : -std::expm1(-x));
            };
            const double ref = oracle_pair([](double x) { return std::exp(-0.5 * x) / std::sqrt(-std::expm1(-x)); },
                                           [](double x) { return 2.0 * std::pow(x, -0.3) * std::exp(-0.7 * x); }, w, t);
            CHECK(rel_err(ours, ref) < 1e-9);
        }
    // Singular exponent sum -0.8 > -1 converges at 0.
    const double ours = pair_integral(g1, g2, Kernel::One, {0.0, kInfinity}).value.real();
    const double ref = oracle_pair([](double x) { return std::exp(-0.5 * x) / std::sqrt(-std::expm1(-x)); },
                                   [](double x) { return 2.0 * std::pow(x, -0.3) * std::exp(-0.7 * x); },
                                   [](double) { return 1.0; }, 0.0);
    CHECK(rel_err(ours, ref) < 1e-8);
}

TEST_CASE("divergence classification")
{
    const Profile g = PowerExp{1.0, -0.5, 1.0};
    CHECK(pair_integral(g, g, Kernel::One, {0.0, kInfinity}).infinite);
    CHECK(pair_integral(g, g, Kernel::ExpNeg, {0.0, kInfinity}).infinite);
    CHECK_FALSE(pair_integral(g, g, Kernel::OneMinusExp, {0.0, kInfinity}).infinite);
    const Profile h = PowerExp{1.0, -0.5, 2.0};
    CHECK_THROWS_AS(pair_integral(g, h, Kernel::One, {0.0, kInfinity}), Error);
    CHECK_FALSE(pair_integral(g, h, Kernel::One, {1e-3, kInfinity}).infinite);
}

TEST_CASE("windows are additive and monotone")
{
    BoundaryWeight mu(2);
    mu.add(0.7, WeightAtom(Canonical{}, {1.0, 0.0}));
    mu.add(0.2, WeightAtom(PowerExp{1.0, -0.2, 0.5}, {cplx(0.6, 0.1), 0.8}));
    mu.add(0.1, WeightAtom(PowerExp{1.0, 1.0, 2.0}, {0.0, 1.0}));
    const Matrix m{{1.0, cplx(0.2, 0.3)}, {cplx(0.2, -0.3), 0.5}};
    for (double t : {1e-6, 1e-3, 0.1, 1.0})
        for (double s : {0.5, 2.0, 30.0}) {
            if (s <= t)
                continue;
            const auto obs = StructuredObservable::lambda(m, {t, s});
            const double a = weight_eval(mu, obs).value;
            const double b = weight_eval(mu, obs.with_window({s, kInfinity})).value;
            const double c = weight_eval(mu, obs.with_window({t, kInfinity})).value;
            CHECK(rel_err(a + b, c) < 1e-10);
        }
    double prev = kInfinity;
    for (double t = 1e-6; t < 10.0; t *= 2.0) {
        const double v = weight_eval(mu, StructuredObservable::lambda(m, {t, kInfinity})).value;
        CHECK(v <= prev + 1e-10);
        CHECK(v >= -1e-12);
        prev = v;
    }
}

TEST_CASE("weight_eval examples")
{
    const BoundaryWeight mu0 = canonical_weight();
    const Matrix one = Matrix::identity(1);
    CHECK(weight_eval(mu0, StructuredObservable::id_minus_lambda(one)).value == doctest::Approx(1.0).epsilon(1e-12));
    for (double t : {0.01, 0.1, 1.0, 3.0})
        CHECK(rel_err(weight_eval(mu0, StructuredObservable::id(1, {t, kInfinity})).value, powers_tail(t)) < 1e-12);
    CHECK(weight_eval(mu0, StructuredObservable::id(1)).infinite);
    BoundaryWeight two(1);
    two.add(1.0, WeightAtom(PowerExp{1.0, -0.5, 1.0}, {1.0}));
    two.add(1.0, WeightAtom(PowerExp{1.0, -0.75, 3.0}, {1.0}));
    CHECK(weight_eval(two, StructuredObservable::id(1)).infinite);
    CHECK_THROWS_AS(weight_eval(mu0, StructuredObservable::id(2)), Error);
}

TEST_CASE("pair_eval examples")
{
    const WeightAtom a(Canonical{}, {1.0, 0.0});
    const WeightAtom b(PowerExp{1.0, 0.0, 1.0}, {0.0, 1.0});
    BoundaryWeight mu(2);
    mu.add(0.5, a);
    const auto obs = StructuredObservable::lambda(Matrix::identity(2), {0.1, kInfinity});
    const double direct = weight_eval(mu, obs).value;
    CHECK(pair_eval(mu.terms(), {a}, obs).real() == doctest::Approx(direct).epsilon(1e-13));
    const cplx z(0.3, -1.2);
    CHECK(std::abs(pair_eval(mu.terms(), {a.scaled(z)}, obs) - z * direct) < 1e-12);
    CHECK(std::abs(pair_eval(mu.terms(), {b}, obs)) < 1e-15);
}

TEST_CASE("unboundedness and H membership")
{
    CHECK(is_unbounded(canonical_weight()));
    BoundaryWeight bounded(1);
    bounded.add(1.0, WeightAtom(PowerExp{1.0, 0.0, 1.0}, {1.0}));
    CHECK_FALSE(is_unbounded(bounded));
    BoundaryWeight mixed = bounded;
    mixed.add(1.0, WeightAtom(PowerExp{1.0, -0.6, 1.0}, {1.0}));
    CHECK(is_unbounded(mixed));
    CHECK(h_membership(Profile{PowerExp{1.0, -0.5, 1.0}}) == HMembership::InHqOnly);
    CHECK(h_membership(Profile{PowerExp{1.0, 0.0, 1.0}}) == HMembership::InH);
    CHECK(h_membership(Profile{PowerExp{1.0, -0.75, 1.0}}) == HMembership::InHqOnly);
}

TEST_CASE("combination_in_H examples")
{
    CHECK_FALSE(combination_in_H({WeightAtom(PowerExp{1.0, -0.5, 1.0}, {1.0})}).exists);
    const auto r = combination_in_H({WeightAtom(PowerExp{1.0, -0.5, 1.0}, {1.0}), WeightAtom(PowerExp{1.0, -0.5, 2.0}, {1.0})});
    REQUIRE(r.exists);
    CHECK(std::abs(r.coefficients[0] + r.coefficients[1]) < 1e-12);
    CHECK(std::abs(r.coefficients[0]) > 0.5);
    CHECK_FALSE(combination_in_H({WeightAtom(PowerExp{1.0, -0.5, 1.0}, {1.0, 0.0}),
                                  WeightAtom(PowerExp{1.0, -0.5, 1.0}, {0.0, 1.0})}).exists);
    GridSampled gs{{0.5, 1.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(combination_in_H({WeightAtom(gs, {1.0})}), Error);
}

TEST_CASE("combination_in_H agrees with a brute-force growth search")
{
    // Oracle: the truncated norm of sum c_i h_i over [t, 1] stays bounded as t -> 0 for some c on a grid.
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick(0, 3);
    const double powers[] = {-0.5, -0.6, -0.3, -0.5};
    const double decays[] = {1.0, 2.0, 0.5, 3.0};
    const CVector dirs[] = {{1.0, 0.0}, {0.0, 1.0}, {std::sqrt(0.5), std::sqrt(0.5)}, {1.0, 0.0}};
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 2);
        std::vector<WeightAtom> atoms;
        for (std::size_t i = 0; i < n; ++i)
            atoms.emplace_back(PowerExp{1.0, powers[pick(rng)], decays[pick(rng)]}, dirs[pick(rng)]);
        const bool ours = combination_in_H(atoms).exists;

        // Growth of the truncated L2 norm from t = 1e-8 to t = 1e-12 on a coefficient grid.
        const auto norm_on = [&](const std::vector<double>& c, double t) {
            BoundaryWeight w(2);
            std::vector<Component> comps;
            for (std::size_t i = 0; i < n; ++i)
                if (c[i] != 0.0) {
                    const WeightAtom scaled_atom = atoms[i].scaled(c[i]);
                    for (const auto& comp : scaled_atom.components())
                        comps.push_back(comp);
                }
            if (comps.empty())
                return 0.0;
            w.add(1.0, WeightAtom::composite(comps));
            return weight_eval(w, StructuredObservable::id(2, {t, 1.0})).value;
        };
        bool oracle = false;
        const double grid[] = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
        std::vector<double> c(n, 0.0);
        const auto visit = [&](auto&& self, std::size_t i) -> void {
            if (oracle)
                return;
            if (i == n) {
                double s = 0.0;
                for (double x : c)
                    s += std::abs(x);
                if (s == 0.0)
                    return;
                if (norm_on(c, 0.5) < 1e-12)
                    return;
                const double a = norm_on(c, 1e-8);
                const double b = norm_on(c, 1e-12);
                if (b - a < 1e-3 * std::max(1.0, a))
                    oracle = true;
                return;
            }
            for (double x : grid) {
                c[i] = x;
                self(self, i + 1);
            }
        };
        visit(visit, 0);
        CHECK(ours == oracle);
    }
}

TEST_CASE("divergent_direction_rank examples")
{
    BoundaryWeight mu(2);
    mu.add(1.0, WeightAtom(Canonical{}, {1.0, 0.0}));
    CHECK(divergent_direction_rank(mu, Matrix::unit(2, 0, 0)));
    CHECK_FALSE(divergent_direction_rank(mu, Matrix::identity(2)));
    BoundaryWeight bounded(2);
    bounded.add(1.0, WeightAtom(PowerExp{1.0, 0.0, 1.0}, {1.0, 0.0}));
    CHECK_FALSE(divergent_direction_rank(bounded, Matrix::unit(2, 0, 0)));
}

TEST_CASE("cancelling composite atoms have finite pairings at 0")
{
    // x^{-1/2}(e^{-x} - e^{-2x}) is square integrable.
    const auto atom = WeightAtom::composite({{PowerExp{1.0, -0.5, 1.0}, {1.0}}, {PowerExp{-1.0, -0.5, 2.0}, {1.0}}});
    const auto v = pair_atoms(atom, atom, Matrix::identity(1), Kernel::One, {0.0, kInfinity}, true);
    CHECK_FALSE(v.infinite);
    const double ref = oracle_pair([](double x) { return (std::exp(-x) - std::exp(-2.0 * x)) / std::sqrt(x); },
                                   [](double x) { return (std::exp(-x) - std::exp(-2.0 * x)) / std::sqrt(x); },
                                   [](double) { return 1.0; }, 0.0);
    CHECK(rel_err(v.value.real(), ref) < 1e-8);
    CHECK(rel_err(v.value.real(), std::log(9.0 / 8.0)) < 1e-8);
}

TEST_CASE("growth expansion of canonical truncations")
{
    const WeightAtom a(Canonical{}, {1.0});
    const auto g = pair_growth(a, a, Matrix::identity(1), Kernel::ExpNeg);
    const auto lead = g.leading();
    REQUIRE(lead.has_value());
    CHECK(lead->first.log_power == 1);
    CHECK(lead->second.real() == doctest::Approx(1.0));
    // -ln(1 - e^{-t}) - e^{-t} = ln(1/t) - 1 + O(t).
    CHECK(g.constant().real() == doctest::Approx(-1.0).epsilon(1e-9));
    for (double t : {1e-6, 1e-5})
        CHECK(std::abs(g(t).real() - (powers_tail(t) - std::exp(-t))) < 1e-4);
    const auto one = pair_growth(a, a, Matrix::identity(1), Kernel::One);
    const auto ratio = ratio_limit(g, one);
    REQUIRE(ratio.has_value());
    CHECK(ratio->real() == doctest::Approx(1.0));
    const WeightAtom b(PowerExp{1.0, 0.0, 1.0}, {1.0});
    CHECK(pair_growth(b, b, Matrix::identity(1), Kernel::One).bounded());
}

TEST_CASE("growth constants include the integrable head")
{
    // int_0^inf x^{-0.6} e^{-3x} dx = Gamma(0.4) / 3^{0.4}, no divergent part.
    const WeightAtom a(PowerExp{1.0, -0.3, 1.0}, {1.0});
    const auto g = pair_growth(a, a, Matrix::identity(1), Kernel::ExpNeg);
    CHECK(g.bounded());
    CHECK(rel_err(g.constant().real(), boost::math::tgamma(0.4) / std::pow(3.0, 0.4)) < 1e-10);

    // x^{-1.4} e^{-3x}: t^{-0.4} / 0.4 + constant + O(t^{0.6}), the constant being Gamma(-0.4) 3^{0.4}.
    const WeightAtom b(PowerExp{1.0, -0.7, 1.0}, {1.0});
    const auto h = pair_growth(b, b, Matrix::identity(1), Kernel::ExpNeg);
    const auto lead = h.leading();
    REQUIRE(lead.has_value());
    CHECK(lead->first.beta == doctest::Approx(0.4));
    CHECK(rel_err(h.constant().real(), boost::math::tgamma(-0.4) * std::pow(3.0, 0.4)) < 1e-9);
    CHECK(h.at_log(std::log(1e4)).real() == doctest::Approx(h(1e-4).real()).epsilon(1e-14));
}
