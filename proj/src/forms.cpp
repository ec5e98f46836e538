#include "qw/forms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qw/errors.hpp"

namespace qw {

ShapeDictionary::ShapeDictionary(std::size_t dim_k) : k_(dim_k) {}

std::size_t ShapeDictionary::shape_index(const Profile& p) const
{
    for (std::size_t s = 0; s < shapes_.size(); ++s)
        if (same_shape(shapes_[s], p))
            return s;
    throw Error(ErrorKind::PreconditionViolated, "profile shape not registered");
}

bool ShapeDictionary::add(const BoundaryWeight& mu)
{
    if (mu.dim() != k_)
        throw Error(ErrorKind::DimensionMismatch, "weight dimension differs from the dictionary");
    for (const auto& term : mu.terms())
        for (const auto& c : term.atom.components()) {
            if (std::holds_alternative<GridSampled>(c.profile)) {
                exact_ = false;
                continue;
            }
            const bool known = std::any_of(shapes_.begin(), shapes_.end(),
                                           [&](const Profile& s) { return same_shape(s, c.profile); });
            if (!known)
                shapes_.push_back(scaled(c.profile, 1.0 / leading_coefficient(c.profile)));
        }
    return exact_;
}

CVector ShapeDictionary::coordinates(const WeightAtom& atom) const
{
    if (!exact_)
        throw Error(ErrorKind::UnsupportedWeightComparison, "grid-sampled profiles have no exact coordinates");
    CVector x(size());
    for (const auto& c : atom.components()) {
        const std::size_t s = shape_index(c.profile);
        const cplx a = leading_coefficient(c.profile);
        for (std::size_t j = 0; j < k_; ++j)
            x[s * k_ + j] += a * c.vector[j];
    }
    return x;
}

Matrix ShapeDictionary::form(const BoundaryWeight& mu) const
{
    Matrix f(size(), size());
    for (const auto& term : mu.terms()) {
        const CVector x = coordinates(term.atom);
        f += term.lambda * Matrix::outer(x, x);
    }
    return f;
}

BoundaryWeight ShapeDictionary::weight(const Matrix& form, double rel_tol) const
{
    BoundaryWeight out(k_);
    if (form.empty() || form.frobenius() == 0.0)
        return out;
    const auto es = hermitian_eigen(form);
    const double top = std::max(std::abs(es.values.front()), std::abs(es.values.back()));
    for (std::size_t e = 0; e < es.values.size(); ++e) {
        if (es.values[e] <= rel_tol * top)
            continue;
        const CVector y = es.vectors.col(e);
        std::vector<Component> comps;
        for (std::size_t s = 0; s < shapes_.size(); ++s) {
            CVector v(y.begin() + static_cast<std::ptrdiff_t>(s * k_),
                      y.begin() + static_cast<std::ptrdiff_t>((s + 1) * k_));
            if (norm2(v) > 1e-14)
                comps.push_back({shapes_[s], std::move(v)});
        }
        if (comps.size() == 1)
            out.add(es.values[e], WeightAtom(comps.front().profile, comps.front().vector));
        else
            out.add(es.values[e], WeightAtom::composite(std::move(comps)));
    }
    return out;
}

namespace {

// Values of mu on 64 random PSD operators tensor identity over 6 truncations.
std::vector<double> sampled_values(const BoundaryWeight& mu, std::uint64_t seed)
{
    static constexpr double kCuts[] = {1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const std::size_t k = mu.dim();
    std::vector<double> out;
    for (int n = 0; n < 64; ++n) {
        Matrix a(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                a(i, j) = cplx(normal(rng), normal(rng));
        const Matrix m = a * a.adjoint();
        for (double cut : kCuts)
            out.push_back(weight_value(mu, {{m, Kernel::One}}, {cut, kInfinity}).real());
    }
    return out;
}

}  // namespace

DominationResult dominates(const BoundaryWeight& mu, const BoundaryWeight& nu, double c, std::uint64_t seed)
{
    if (mu.dim() != nu.dim())
        throw Error(ErrorKind::DimensionMismatch, "weights over different spaces");
    ShapeDictionary dict(mu.dim());
    dict.add(mu);
    dict.add(nu);
    if (dict.exact()) {
        const Matrix fm = dict.form(mu);
        const Matrix diff = fm - c * dict.form(nu);
        if (diff.empty())
            return {true, false, 0.0};
        const double lo = min_eigenvalue(diff);
        const double scale = std::max({1.0, fm.frobenius()});
        return {lo >= -1e-9 * scale, false, lo};
    }
    const auto a = sampled_values(mu, seed);
    const auto b = sampled_values(nu, seed);
    double lo = kInfinity;
    double scale = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        lo = std::min(lo, a[i] - c * b[i]);
        scale = std::max(scale, std::abs(a[i]));
    }
    return {lo >= -1e-9 * scale, true, lo};
}

BoundaryWeight weight_difference(const BoundaryWeight& mu, const BoundaryWeight& nu, double c)
{
    ShapeDictionary dict(mu.dim());
    dict.add(mu);
    dict.add(nu);
    if (!dict.exact())
        throw Error(ErrorKind::UnsupportedWeightComparison, "weight difference needs analytic profiles");
    const Matrix fm = dict.form(mu);
    const Matrix diff = fm - c * dict.form(nu);
    if (!diff.empty() && min_eigenvalue(diff) < -1e-9 * std::max(1.0, fm.frobenius()))
        throw Error(ErrorKind::NotDominated, "weight difference is not positive");
    return dict.weight(diff, 1e-10);
}

bool weights_equal(const BoundaryWeight& mu, const BoundaryWeight& nu, double rel_tol)
{
    const auto s = proportionality_factor(mu, nu, rel_tol);
    if (mu.empty() && nu.empty())
        return true;
    return s && std::abs(*s - 1.0) <= rel_tol;
}

std::optional<double> proportionality_factor(const BoundaryWeight& mu, const BoundaryWeight& nu, double rel_tol)
{
    if (mu.dim() != nu.dim())
        return std::nullopt;
    if (mu.empty())
        return nu.empty() ? std::optional<double>(0.0) : std::nullopt;
    ShapeDictionary dict(mu.dim());
    dict.add(mu);
    dict.add(nu);
    if (dict.exact()) {
        const Matrix fm = dict.form(mu);
        const Matrix fn = dict.form(nu);
        const double s = fn.trace().real() / fm.trace().real();
        if ((fn - s * fm).frobenius() <= rel_tol * std::max(fn.frobenius(), fm.frobenius()))
            return s;
        return std::nullopt;
    }
    const auto a = sampled_values(mu, 0xC0FFEE);
    const auto b = sampled_values(nu, 0xC0FFEE);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        den += a[i] * a[i];
    }
    const double s = num / den;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(b[i] - s * a[i]) > rel_tol * std::max(1.0, std::abs(b[i])))
            return std::nullopt;
    return s;
}

}  // namespace qw
