#include "qw/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>
#include <algorithm>

#include "qw/errors.hpp"

namespace qw {

namespace {

constexpr double kEps = 1e-15;
constexpr int kMaxIter = 10000;

// Lower incomplete gamma by its power series, a > 0.
double lower_gamma_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps)
            break;
    }
    return sum * std::exp(-x + a * std::log(x));
}

// Gamma(a, x) by the Legendre continued fraction (modified Lentz), valid for x > 0 and any real a.
double upper_gamma_cf(double a, double x)
{
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps)
            break;
    }
    return std::exp(-x + a * std::log(x)) * h;
}

}  // namespace

double expint_e1(double x)
{
    if (!(x > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "E1 needs x > 0");
    if (x >= 1.0)
        return upper_gamma_cf(0.0, x);
    double sum = 0.0;
    double term = 1.0;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= -x / n;
        const double add = term / n;
        sum += add;
        if (std::abs(add) < kEps * std::abs(sum))
            break;
    }
    return -std::numbers::egamma - std::log(x) - sum;
}

double upper_gamma(double a, double x)
{
    if (x < 0.0 || std::isnan(x))
        throw Error(ErrorKind::PreconditionViolated, "incomplete gamma needs x >= 0");
    if (x == 0.0) {
        if (a <= 0.0)
            return std::numeric_limits<double>::infinity();
        return std::tgamma(a);
    }
    if (a > 0.0) {
        if (x < a + 1.0)
            return std::tgamma(a) - lower_gamma_series(a, x);
        return upper_gamma_cf(a, x);
    }
    if (x >= 1.0)
        return upper_gamma_cf(a, x);
    if (a == 0.0)
        return expint_e1(x);
    // Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a, stepping up to a > 0 or a = 0.
    return (upper_gamma(a + 1.0, x) - std::exp(a * std::log(x) - x)) / a;
}

namespace {

struct SimpsonState {
    const std::function<double(double)>& f;
    double tol;
    int max_depth;
};

double simpson_step(const SimpsonState& st, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = st.f(lm);
    const double frm = st.f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= st.max_depth || std::abs(delta) <= 15.0 * tol || !(b - a > 0.0) || m <= a || m >= b)
        return left + right + delta / 15.0;
    return simpson_step(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
         + simpson_step(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts)
{
    if (!(b > a))
        return 0.0;
    // A coarse pass fixes the absolute tolerance from the magnitude of the integral.
    constexpr int n = 16;
    const double h = (b - a) / n;
    double coarse = 0.0;
    double mass = 0.0;
    std::vector<double> fx(2 * n + 1);
    for (int i = 0; i <= 2 * n; ++i)
        fx[static_cast<std::size_t>(i)] = f(a + 0.5 * h * i);
    for (int i = 0; i < n; ++i) {
        const double s = h / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
        coarse += s;
        mass += h / 6.0 * (std::abs(fx[2 * i]) + 4.0 * std::abs(fx[2 * i + 1]) + std::abs(fx[2 * i + 2]));
    }
    const double tol = std::max(opts.abs_tol, opts.rel_tol * std::max(std::abs(coarse), 1e-3 * mass));
    const SimpsonState st{f, tol, opts.max_depth};
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x0 = a + h * i;
        const double x1 = i + 1 == n ? b : a + h * (i + 1);
        const double whole = (x1 - x0) / 6.0 * (fx[2 * i] + 4.0 * fx[2 * i + 1] + fx[2 * i + 2]);
        total += simpson_step(st, x0, x1, fx[2 * i], fx[2 * i + 1], fx[2 * i + 2], whole, tol / n, 1);
    }
    return total;
}

}  // namespace qw
