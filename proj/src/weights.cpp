#include "qw/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qw/errors.hpp"
#include "qw/special.hpp"

namespace qw {

namespace {

constexpr double kExpTol = 1e-12;
// Below this point divergent-but-cancelling pairings are integrated from their series.
constexpr double kSeriesCut = 1e-10;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_grid(const Profile& g)
{
    return std::holds_alternative<GridSampled>(g);
}

cplx amplitude_of(const Profile& g)
{
    return std::visit(Overloaded{[](const PowerExp& p) { return p.amplitude; },
                                 [](const Canonical& c) { return c.amplitude; },
                                 [](const GridSampled&) { return cplx(1.0); }},
                      g);
}

// First-order series coefficient: g(x) = c x^q (1 + d x + ...).
double first_order(const Profile& g)
{
    return std::visit(Overloaded{[](const PowerExp& p) { return -p.decay; }, [](const Canonical&) { return -0.25; },
                                 [](const GridSampled&) { return 0.0; }},
                      g);
}

double kernel_shift(Kernel k)
{
    return k == Kernel::OneMinusExp ? 1.0 : 0.0;
}

// First-order coefficient of the kernel after removing x^shift.
double kernel_first_order(Kernel k)
{
    switch (k) {
    case Kernel::One: return 0.0;
    case Kernel::ExpNeg: return -1.0;
    case Kernel::OneMinusExp: return -0.5;
    }
    return 0.0;
}

double kernel_value(Kernel k, double x)
{
    switch (k) {
    case Kernel::One: return 1.0;
    case Kernel::ExpNeg: return std::exp(-x);
    case Kernel::OneMinusExp: return -std::expm1(-x);
    }
    return 1.0;
}

// coeff * x^gamma * e^{-sigma x} * (1 - e^{-x})^eps
struct Integrand {
    cplx coeff;
    double gamma = 0.0;
    double sigma = 0.0;
    double eps = 0.0;
};

Integrand make_integrand(const Profile& g1, const Profile& g2, Kernel k)
{
    Integrand out;
    out.coeff = std::conj(amplitude_of(g1)) * amplitude_of(g2);
    for (const Profile* g : {&g1, &g2}) {
        if (const auto* p = std::get_if<PowerExp>(g)) {
            out.gamma += p->power;
            out.sigma += p->decay;
        } else {
            out.sigma += 0.5;
            out.eps -= 0.5;
        }
    }
    if (k == Kernel::ExpNeg)
        out.sigma += 1.0;
    if (k == Kernel::OneMinusExp)
        out.eps += 1.0;
    return out;
}

// (1 - e^{-x}) / x, continuous at 0.
double one_minus_exp_ratio(double x)
{
    if (x < 1e-300)
        return 1.0;
    return -std::expm1(-x) / x;
}

double tail_from(double gamma, double sigma, double eps, double x)
{
    // (1 - e^{-y})^eps = 1 + eps e^{-y} + O(e^{-2y}) beyond x >= 40.
    double v = std::pow(sigma, -gamma - 1.0) * upper_gamma(gamma + 1.0, sigma * x);
    if (eps != 0.0)
        v += eps * std::pow(sigma + 1.0, -gamma - 1.0) * upper_gamma(gamma + 1.0, (sigma + 1.0) * x);
    return v;
}

double numeric_integral(double gamma, double sigma, double eps, double a, double b)
{
    const double beta = gamma + eps;
    const QuadratureOptions opts{1e-11, 1e-300, 60};
    double total = 0.0;
    if (a < 1.0) {
        const double c = std::min(b, 1.0);
        if (a == 0.0) {
            const double m = beta + 1.0;
            total += adaptive_simpson(
                [&](double u) {
                    const double x = std::pow(u, 1.0 / m);
                    return std::exp(-sigma * x) * std::pow(one_minus_exp_ratio(x), eps) / m;
                },
                0.0, std::pow(c, m), opts);
        } else {
            total += adaptive_simpson(
                [&](double v) {
                    const double x = std::exp(v);
                    return std::pow(x, beta + 1.0) * std::exp(-sigma * x) * std::pow(one_minus_exp_ratio(x), eps);
                },
                std::log(a), std::log(c), opts);
        }
    }
    const double far = 40.0 + 10.0 / sigma;
    const double lo = std::max(a, 1.0);
    const double hi = std::min(b, far);
    if (hi > lo)
        total += adaptive_simpson(
            [&](double x) { return std::pow(x, gamma) * std::exp(-sigma * x) * std::pow(-std::expm1(-x), eps); }, lo, hi,
            opts);
    if (b > far) {
        const double start = std::max(a, far);
        total += tail_from(gamma, sigma, eps, start);
        if (std::isfinite(b))
            total -= tail_from(gamma, sigma, eps, b);
    }
    return total;
}

// Integral of x^gamma e^{-sigma x} (1 - e^{-x})^eps over [a, b]; requires convergence.
double integrand_integral(const Integrand& f, double a, double b)
{
    if (!(b > a))
        return 0.0;
    const double g = f.gamma;
    const double s = f.sigma;
    if (std::abs(f.eps) < kExpTol) {
        const double scale = std::pow(s, -g - 1.0);
        const double upper = std::isfinite(b) ? upper_gamma(g + 1.0, s * b) : 0.0;
        return scale * (upper_gamma(g + 1.0, s * a) - upper);
    }
    const double n = std::round(s);
    if (std::abs(f.eps + 1.0) < kExpTol && std::abs(g) < kExpTol && std::abs(s - n) < kExpTol && n >= 1.0) {
        // e^{-n x} / (1 - e^{-x}) = e^{-x} / (1 - e^{-x}) - sum_{j<n} e^{-j x}.
        const auto log_part = [](double x) { return std::isfinite(x) ? std::log(-std::expm1(-x)) : 0.0; };
        double v = log_part(b) - log_part(a);
        for (int j = 1; j < static_cast<int>(n); ++j) {
            const double eb = std::isfinite(b) ? std::exp(-j * b) : 0.0;
            v += (eb - std::exp(-j * a)) / j;
        }
        return v;
    }
    return numeric_integral(g, s, f.eps, a, b);
}

cplx grid_value(const GridSampled& g, double x)
{
    const auto& k = g.knots;
    if (k.empty() || x < k.front() || x > k.back())
        return 0.0;
    const auto it = std::upper_bound(k.begin(), k.end(), x);
    if (it == k.end())
        return g.values.back();
    const std::size_t i = static_cast<std::size_t>(it - k.begin());
    if (i == 0)
        return g.values.front();
    const double w = (x - k[i - 1]) / (k[i] - k[i - 1]);
    return (1.0 - w) * g.values[i - 1] + w * g.values[i];
}

// Pairings involving a bounded, compactly supported sampled profile.
cplx grid_pair_integral(const Profile& g1, const Profile& g2, Kernel kernel, Window w)
{
    std::vector<double> cuts;
    for (const Profile* g : {&g1, &g2})
        if (const auto* gs = std::get_if<GridSampled>(g))
            cuts.insert(cuts.end(), gs->knots.begin(), gs->knots.end());
    std::sort(cuts.begin(), cuts.end());
    double lo = cuts.front();
    double hi = cuts.back();
    for (const Profile* g : {&g1, &g2})
        if (const auto* gs = std::get_if<GridSampled>(g)) {
            lo = std::max(lo, gs->knots.front());
            hi = std::min(hi, gs->knots.back());
        }
    lo = std::max(lo, w.lower);
    hi = std::min(hi, w.upper);
    if (!(hi > lo))
        return 0.0;
    const auto f = [&](double x) { return std::conj(profile_value(g1, x)) * profile_value(g2, x) * kernel_value(kernel, x); };
    cplx total = 0.0;
    double prev = lo;
    cuts.push_back(hi);
    for (double c : cuts) {
        if (c <= prev)
            continue;
        const double next = std::min(c, hi);
        total += cplx(adaptive_simpson([&](double x) { return f(x).real(); }, prev, next),
                      adaptive_simpson([&](double x) { return f(x).imag(); }, prev, next));
        prev = next;
        if (prev >= hi)
            break;
    }
    return total;
}

bool profiles_equal(const Profile& a, const Profile& b)
{
    if (!same_shape(a, b))
        return false;
    return std::abs(amplitude_of(a) - amplitude_of(b)) <= 1e-14 * std::max(1.0, std::abs(amplitude_of(a)));
}

double relative_scale(const Matrix& m)
{
    return std::max(1.0, m.frobenius());
}

}  // namespace

Profile scaled(const Profile& g, cplx factor)
{
    return std::visit(Overloaded{[&](const PowerExp& p) -> Profile { return PowerExp{p.amplitude * factor, p.power, p.decay}; },
                                 [&](const Canonical& c) -> Profile { return Canonical{c.amplitude * factor}; },
                                 [&](const GridSampled& gs) -> Profile {
                                     GridSampled out = gs;
                                     for (auto& v : out.values)
                                         v *= factor;
                                     return out;
                                 }},
                      g);
}

cplx profile_value(const Profile& g, double x)
{
    return std::visit(
        Overloaded{[&](const PowerExp& p) { return p.amplitude * std::pow(x, p.power) * std::exp(-p.decay * x); },
                   [&](const Canonical& c) { return c.amplitude * std::exp(-0.5 * x) / std::sqrt(-std::expm1(-x)); },
                   [&](const GridSampled& gs) { return grid_value(gs, x); }},
        g);
}

bool same_shape(const Profile& a, const Profile& b)
{
    if (a.index() != b.index())
        return false;
    if (const auto* pa = std::get_if<PowerExp>(&a)) {
        const auto& pb = std::get<PowerExp>(b);
        return std::abs(pa->power - pb.power) < kExpTol && std::abs(pa->decay - pb.decay) < kExpTol;
    }
    if (const auto* ga = std::get_if<GridSampled>(&a)) {
        const auto& gb = std::get<GridSampled>(b);
        if (ga->knots != gb.knots)
            return false;
        // Same shape means proportional values.
        cplx ratio = 0.0;
        for (std::size_t i = 0; i < ga->values.size(); ++i) {
            if (std::abs(ga->values[i]) > 1e-300 && ratio == cplx{})
                ratio = gb.values[i] / ga->values[i];
            if (std::abs(ratio * ga->values[i] - gb.values[i]) > 1e-12 * std::max(1.0, std::abs(gb.values[i])))
                return false;
        }
        return true;
    }
    return true;
}

double leading_exponent(const Profile& g)
{
    return std::visit(Overloaded{[](const PowerExp& p) { return p.power; }, [](const Canonical&) { return -0.5; },
                                 [](const GridSampled&) { return 0.0; }},
                      g);
}

cplx leading_coefficient(const Profile& g)
{
    if (is_grid(g))
        return 0.0;
    return amplitude_of(g);
}

PairValue pair_integral(const Profile& g1, const Profile& g2, Kernel kernel, Window window)
{
    if (window.lower < 0.0 || !(window.upper > window.lower))
        throw Error(ErrorKind::PreconditionViolated, "invalid window");
    for (const Profile* g : {&g1, &g2}) {
        if (const auto* p = std::get_if<PowerExp>(g); p && (p->power <= -1.0 || p->decay <= 0.0))
            throw Error(ErrorKind::UnsupportedProfile, "power-exponential profile needs p > -1 and s > 0");
        if (const auto* gs = std::get_if<GridSampled>(g);
            gs && (gs->knots.size() < 2 || gs->knots.size() != gs->values.size() || gs->knots.front() <= 0.0
                   || !std::is_sorted(gs->knots.begin(), gs->knots.end())))
            throw Error(ErrorKind::UnsupportedProfile, "sampled profile needs increasing positive knots");
    }
    if (is_grid(g1) || is_grid(g2))
        return {false, grid_pair_integral(g1, g2, kernel, window)};
    const Integrand f = make_integrand(g1, g2, kernel);
    if (window.lower == 0.0 && f.gamma + f.eps <= -1.0 + kExpTol) {
        if (profiles_equal(g1, g2) && kernel != Kernel::OneMinusExp)
            return {true, kInfinity};
        throw Error(ErrorKind::DivergentCross, "pairing diverges at 0 and is not a positive diagonal term");
    }
    return {false, f.coeff * integrand_integral(f, window.lower, window.upper)};
}

WeightAtom::WeightAtom(Profile profile, CVector v)
{
    const double n = norm2(v);
    if (!(n > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "weight atom vector must be nonzero");
    for (auto& x : v)
        x /= n;
    dim_ = v.size();
    components_.push_back({qw::scaled(profile, n), std::move(v)});
}

WeightAtom WeightAtom::composite(std::vector<Component> components)
{
    if (components.empty())
        throw Error(ErrorKind::PreconditionViolated, "composite atom needs components");
    WeightAtom a;
    a.dim_ = components.front().vector.size();
    for (const auto& c : components)
        if (c.vector.size() != a.dim_)
            throw Error(ErrorKind::DimensionMismatch, "composite atom components differ in dimension");
    a.components_ = std::move(components);
    return a;
}

CVector WeightAtom::value(double x) const
{
    CVector out(dim_);
    for (const auto& c : components_) {
        const cplx g = profile_value(c.profile, x);
        for (std::size_t i = 0; i < dim_; ++i)
            out[i] += g * c.vector[i];
    }
    return out;
}

WeightAtom WeightAtom::transformed(const Matrix& u) const
{
    WeightAtom a = *this;
    for (auto& c : a.components_)
        c.vector = u * c.vector;
    a.dim_ = u.rows();
    return a;
}

WeightAtom WeightAtom::scaled(cplx factor) const
{
    WeightAtom a = *this;
    for (auto& c : a.components_)
        c.profile = qw::scaled(c.profile, factor);
    return a;
}

BoundaryWeight::BoundaryWeight(std::size_t dim_k, std::vector<WeightTerm> terms) : dim_(dim_k)
{
    for (auto& t : terms)
        add(t.lambda, std::move(t.atom));
}

void BoundaryWeight::add(double lambda, WeightAtom atom)
{
    if (!(lambda > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "weight coefficients must be positive");
    if (atom.dim() != dim_)
        throw Error(ErrorKind::DimensionMismatch, "atom dimension differs from the weight");
    terms_.push_back({lambda, std::move(atom)});
}

BoundaryWeight BoundaryWeight::scaled(double c) const
{
    if (c < 0.0)
        throw Error(ErrorKind::PreconditionViolated, "weights scale by non-negative factors");
    BoundaryWeight out(dim_);
    if (c == 0.0)
        return out;
    for (const auto& t : terms_)
        out.add(c * t.lambda, t.atom);
    return out;
}

BoundaryWeight BoundaryWeight::transformed(const Matrix& u) const
{
    BoundaryWeight out(u.rows());
    for (const auto& t : terms_)
        out.add(t.lambda, t.atom.transformed(u));
    return out;
}

BoundaryWeight operator+(const BoundaryWeight& a, const BoundaryWeight& b)
{
    if (a.dim() != b.dim())
        throw Error(ErrorKind::DimensionMismatch, "weight sum");
    BoundaryWeight out = a;
    for (const auto& t : b.terms())
        out.add(t.lambda, t.atom);
    return out;
}

BoundaryWeight canonical_weight()
{
    BoundaryWeight mu(1);
    mu.add(1.0, WeightAtom(Canonical{}, CVector{1.0}));
    return mu;
}

StructuredObservable::StructuredObservable(Kind kind, Matrix op, Window w) : kind_(kind), op_(std::move(op)), window_(w)
{
    if (!op_.square())
        throw Error(ErrorKind::DimensionMismatch, "observable operator must be square");
    if (w.lower < 0.0 || !(w.upper > w.lower))
        throw Error(ErrorKind::PreconditionViolated, "invalid window");
}

StructuredObservable StructuredObservable::id(std::size_t k, Window w)
{
    return {Kind::Id, Matrix::identity(k), w};
}

StructuredObservable StructuredObservable::lambda(Matrix t, Window w)
{
    return {Kind::Lambda, std::move(t), w};
}

StructuredObservable StructuredObservable::op_tensor_id(Matrix m, Window w)
{
    return {Kind::OpTensorId, std::move(m), w};
}

StructuredObservable StructuredObservable::id_minus_lambda(Matrix t, Window w)
{
    return {Kind::IdMinusLambda, std::move(t), w};
}

StructuredObservable StructuredObservable::with_window(Window w) const
{
    return {kind_, op_, w};
}

std::vector<OperatorTerm> StructuredObservable::lowered() const
{
    switch (kind_) {
    case Kind::Id:
    case Kind::OpTensorId: return {{op_, Kernel::One}};
    case Kind::Lambda: return {{op_, Kernel::ExpNeg}};
    case Kind::IdMinusLambda: {
        std::vector<OperatorTerm> out;
        const Matrix rest = Matrix::identity(op_.rows()) - op_;
        if (rest.frobenius() > 0.0)
            out.push_back({rest, Kernel::One});
        out.push_back({op_, Kernel::OneMinusExp});
        return out;
    }
    }
    return {};
}

ExtendedReal& ExtendedReal::operator+=(const ExtendedReal& o)
{
    infinite = infinite || o.infinite;
    value = infinite ? kInfinity : value + o.value;
    return *this;
}

PairValue pair_atoms(const WeightAtom& bra, const WeightAtom& ket, const Matrix& m, Kernel kernel, Window window,
                     bool diagonal)
{
    if (bra.dim() != m.rows() || ket.dim() != m.rows())
        throw Error(ErrorKind::DimensionMismatch, "atom and operator dimensions differ");
    struct Pair {
        const Component* a;
        const Component* b;
        cplx weight;     // <v_a, M v_b>
        double exponent; // leading exponent of the integrand at 0
    };
    std::vector<Pair> pairs;
    const double mscale = relative_scale(m);
    for (const auto& a : bra.components())
        for (const auto& b : ket.components()) {
            const cplx w = inner(a.vector, m * b.vector);
            if (std::abs(w) <= 1e-15 * mscale * norm2(a.vector) * norm2(b.vector))
                continue;
            double e = kernel_shift(kernel);
            const bool bounded = is_grid(a.profile) || is_grid(b.profile);
            e += bounded ? 0.0 : leading_exponent(a.profile) + leading_exponent(b.profile);
            pairs.push_back({&a, &b, w, bounded ? 0.0 : e});
        }

    const auto pairwise = [&](Window w) {
        cplx total = 0.0;
        for (const auto& p : pairs)
            total += p.weight * pair_integral(p.a->profile, p.b->profile, kernel, w).value;
        return total;
    };

    const bool divergent_pair = window.lower == 0.0 && std::any_of(pairs.begin(), pairs.end(), [](const Pair& p) {
                                    return p.exponent <= -1.0 + kExpTol;
                                });
    if (!divergent_pair)
        return {false, pairwise(window)};

    // Aggregate the leading coefficients by exponent; uncancelled singular terms diverge.
    std::map<long long, std::pair<cplx, double>> leading;
    std::map<long long, std::pair<cplx, double>> series;  // integrand as sum c x^e near 0
    const auto key = [](double e) { return std::llround(e * 1e9); };
    for (const auto& p : pairs) {
        const cplx c = p.weight * std::conj(leading_coefficient(p.a->profile)) * leading_coefficient(p.b->profile);
        if (is_grid(p.a->profile) || is_grid(p.b->profile))
            continue;
        auto& lead = series[key(p.exponent)];
        lead.first += c;
        lead.second += std::abs(c);
        const double d = first_order(p.a->profile) + first_order(p.b->profile) + kernel_first_order(kernel);
        auto& next = series[key(p.exponent + 1.0)];
        next.first += c * d;
        next.second += std::abs(c * d);
    }
    bool diverges = false;
    for (const auto& [k, cm] : series)
        if (static_cast<double>(k) * 1e-9 <= -1.0 + kExpTol && std::abs(cm.first) > 1e-10 * cm.second)
            diverges = true;
    if (diverges) {
        if (diagonal && kernel != Kernel::OneMinusExp && is_psd(m))
            return {true, kInfinity};
        throw Error(ErrorKind::DivergentCross, "pairing diverges at 0 and is not a positive diagonal term");
    }
    const double cut = std::min(kSeriesCut, window.upper);
    cplx head = 0.0;
    for (const auto& [k, cm] : series) {
        const double e = static_cast<double>(k) * 1e-9;
        if (e <= -1.0 + kExpTol)
            continue;
        head += cm.first * std::pow(cut, e + 1.0) / (e + 1.0);
    }
    return {false, head + pairwise({cut, window.upper})};
}

Matrix atom_density(const WeightAtom& bra, const WeightAtom& ket, Kernel kernel, Window window)
{
    const std::size_t k = bra.dim();
    Matrix d(k, k);
    for (const auto& a : bra.components())
        for (const auto& b : ket.components()) {
            const PairValue pv = pair_integral(a.profile, b.profile, kernel, window);
            if (pv.infinite)
                throw Error(ErrorKind::DivergentCross, "atom density needs finite component pairings");
            // <v_a, M v_b> G = tr(M v_b v_a^*) G
            d += pv.value * Matrix::outer(b.vector, a.vector);
        }
    return d;
}

ExtendedReal weight_eval(const BoundaryWeight& mu, const StructuredObservable& obs)
{
    if (obs.op().rows() != mu.dim())
        throw Error(ErrorKind::DimensionMismatch, "observable dimension differs from the weight");
    ExtendedReal total;
    for (const auto& term : obs.lowered()) {
        if (!is_hermitian(term.op))
            throw Error(ErrorKind::NotHermitian, "weight_eval needs a Hermitian observable");
        for (const auto& wt : mu.terms()) {
            const PairValue pv = pair_atoms(wt.atom, wt.atom, term.op, term.kernel, obs.window(), true);
            total += pv.infinite ? ExtendedReal::plus_infinity() : ExtendedReal::finite(wt.lambda * pv.value.real());
        }
    }
    return total;
}

cplx weight_value(const BoundaryWeight& mu, const std::vector<OperatorTerm>& terms, Window window)
{
    cplx total = 0.0;
    for (const auto& term : terms)
        for (const auto& wt : mu.terms()) {
            const PairValue pv = pair_atoms(wt.atom, wt.atom, term.op, term.kernel, window, true);
            if (pv.infinite)
                throw Error(ErrorKind::DivergentCross, "weight value diverges");
            total += wt.lambda * pv.value;
        }
    return total;
}

cplx pair_eval(const std::vector<WeightTerm>& bra, const std::vector<WeightAtom>& ket, const StructuredObservable& obs)
{
    if (bra.size() != ket.size())
        throw Error(ErrorKind::PreconditionViolated, "bra and ket lists differ in length");
    cplx total = 0.0;
    for (const auto& term : obs.lowered())
        for (std::size_t i = 0; i < bra.size(); ++i) {
            const PairValue pv = pair_atoms(bra[i].atom, ket[i], term.op, term.kernel, obs.window(), false);
            total += bra[i].lambda * pv.value;
        }
    return total;
}

namespace {

// Singular coefficient vectors V_q (q <= -1/2) of an atom, keyed by exponent.
std::map<long long, CVector> singular_parts(const WeightAtom& atom)
{
    std::map<long long, CVector> out;
    for (const auto& c : atom.components()) {
        if (is_grid(c.profile))
            continue;
        const double q = leading_exponent(c.profile);
        if (q > -0.5 + kExpTol)
            continue;
        auto& v = out[std::llround(q * 1e9)];
        if (v.empty())
            v.assign(atom.dim(), 0.0);
        const cplx a = leading_coefficient(c.profile);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += a * c.vector[i];
    }
    for (auto it = out.begin(); it != out.end();) {
        double mass = 0.0;
        for (const auto& c : atom.components())
            mass = std::max(mass, std::abs(leading_coefficient(c.profile)) * norm2(c.vector));
        if (norm2(it->second) <= 1e-10 * std::max(mass, 1e-300))
            it = out.erase(it);
        else
            ++it;
    }
    return out;
}

bool atoms_proportional(const WeightAtom& a, const WeightAtom& b, cplx& ratio)
{
    if (a.components().size() != b.components().size() || a.dim() != b.dim())
        return false;
    ratio = 0.0;
    for (std::size_t i = 0; i < a.components().size(); ++i) {
        const auto& ca = a.components()[i];
        const auto& cb = b.components()[i];
        if (!same_shape(ca.profile, cb.profile))
            return false;
        const double x = is_grid(ca.profile) ? std::get<GridSampled>(ca.profile).knots.front() : 1.0;
        CVector va = ca.vector;
        CVector vb = cb.vector;
        const cplx ga = profile_value(ca.profile, x);
        const cplx gb = profile_value(cb.profile, x);
        for (std::size_t j = 0; j < va.size(); ++j) {
            va[j] *= ga;
            vb[j] *= gb;
        }
        const double na = norm2(va);
        if (na == 0.0)
            return false;
        const cplx r = inner(va, vb) / (na * na);
        if (i == 0)
            ratio = r;
        if (std::abs(r - ratio) > 1e-12 * std::max(1.0, std::abs(ratio)))
            return false;
        for (std::size_t j = 0; j < va.size(); ++j)
            if (std::abs(vb[j] - r * va[j]) > 1e-12 * std::max(1.0, norm2(vb)))
                return false;
    }
    return std::abs(ratio) > 0.0;
}

}  // namespace

bool is_unbounded(const BoundaryWeight& mu)
{
    return std::any_of(mu.terms().begin(), mu.terms().end(),
                       [](const WeightTerm& t) { return !singular_parts(t.atom).empty(); });
}

HMembership h_membership(const Profile& g)
{
    if (is_grid(g))
        return HMembership::InH;
    return leading_exponent(g) > -0.5 + kExpTol ? HMembership::InH : HMembership::InHqOnly;
}

HMembership h_membership(const WeightAtom& atom)
{
    return singular_parts(atom).empty() ? HMembership::InH : HMembership::InHqOnly;
}

CombinationResult combination_in_H(const std::vector<WeightAtom>& atoms)
{
    CombinationResult result;
    result.coefficients.assign(atoms.size(), 0.0);
    for (const auto& a : atoms)
        for (const auto& c : a.components())
            if (is_grid(c.profile))
                throw Error(ErrorKind::UnsupportedProfile, "combination test supports closed-form profiles only");

    // Merge atoms that are scalar multiples of each other.
    std::vector<std::size_t> representative;
    std::vector<std::vector<std::pair<std::size_t, cplx>>> members;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        bool merged = false;
        for (std::size_t r = 0; r < representative.size() && !merged; ++r) {
            cplx ratio;
            if (atoms_proportional(atoms[representative[r]], atoms[i], ratio)) {
                members[r].push_back({i, ratio});
                merged = true;
            }
        }
        if (!merged) {
            representative.push_back(i);
            members.push_back({{i, 1.0}});
        }
    }

    std::vector<std::map<long long, CVector>> parts;
    std::vector<long long> exponents;
    for (std::size_t r = 0; r < representative.size(); ++r) {
        parts.push_back(singular_parts(atoms[representative[r]]));
        if (parts.back().empty()) {
            result.exists = true;
            result.coefficients[representative[r]] = 1.0;
            return result;
        }
        for (const auto& [q, v] : parts.back())
            exponents.push_back(q);
    }
    std::sort(exponents.begin(), exponents.end());
    exponents.erase(std::unique(exponents.begin(), exponents.end()), exponents.end());
    const std::size_t k = atoms.empty() ? 0 : atoms.front().dim();
    if (representative.empty())
        return result;

    Matrix stacked(exponents.size() * k, representative.size());
    for (std::size_t r = 0; r < representative.size(); ++r)
        for (std::size_t e = 0; e < exponents.size(); ++e)
            if (const auto it = parts[r].find(exponents[e]); it != parts[r].end()) {
                for (std::size_t i = 0; i < k; ++i)
                    stacked(e * k + i, r) = it->second[i];
            }
    // Normalize columns so the rank decision is scale free.
    std::vector<double> col_norm(representative.size());
    for (std::size_t r = 0; r < representative.size(); ++r) {
        col_norm[r] = norm2(stacked.col(r));
        for (std::size_t i = 0; i < stacked.rows(); ++i)
            stacked(i, r) /= col_norm[r];
    }
    const auto es = hermitian_eigen(stacked.adjoint() * stacked);
    if (es.values.front() > 1e-18 * std::max(1.0, es.values.back()))
        return result;
    const CVector c = es.vectors.col(0);
    std::size_t pivot = 0;
    for (std::size_t r = 0; r < c.size(); ++r)
        if (std::abs(c[r]) > std::abs(c[pivot]))
            pivot = r;
    result.exists = true;
    for (std::size_t r = 0; r < c.size(); ++r)
        result.coefficients[representative[r]] = c[r] / c[pivot] / col_norm[r] * col_norm[pivot];
    return result;
}

bool divergent_direction_rank(const BoundaryWeight& mu, const Matrix& t)
{
    const std::size_t rank_t = numerical_rank(t, default_tol.range);
    if (rank_t == 0)
        return true;
    std::vector<CVector> cols;
    for (const auto& term : mu.terms())
        for (const auto& [q, v] : singular_parts(term.atom))
            cols.push_back(t * v);
    if (cols.empty())
        return false;
    Matrix m(t.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        m.set_col(j, cols[j]);
    return numerical_rank(m, default_tol.range) == rank_t;
}

std::vector<CVector> divergent_vectors(const BoundaryWeight& mu)
{
    std::vector<CVector> out;
    for (const auto& term : mu.terms())
        for (auto& [q, v] : singular_parts(term.atom))
            out.push_back(std::move(v));
    return out;
}

void GrowthPoly::add(Key key, cplx coefficient, double mass)
{
    key.beta = std::round(key.beta * 1e9) * 1e-9;
    auto& slot = terms_[key];
    slot.first += coefficient;
    slot.second += mass;
}

cplx GrowthPoly::divergent_part(double t) const
{
    cplx v = 0.0;
    for (const auto& [k, cm] : terms_)
        v += cm.first * std::pow(t, -k.beta) * std::pow(std::log(1.0 / t), k.log_power);
    return v;
}

cplx GrowthPoly::at_log(double ell) const
{
    // Cancelled terms are skipped: their rounding residue would be amplified by e^{beta ell}.
    cplx v = constant_;
    for (const auto& [k, cm] : terms_)
        if (std::abs(cm.first) > 1e-9 * std::max(cm.second, 1e-300))
            v += cm.first * std::exp(k.beta * ell) * std::pow(ell, k.log_power);
    return v;
}

double GrowthPoly::max_power() const
{
    const auto lead = leading();
    return lead ? lead->first.beta : 0.0;
}

bool GrowthPoly::bounded(double rel_tol) const
{
    return !leading(rel_tol).has_value();
}

std::optional<std::pair<GrowthPoly::Key, cplx>> GrowthPoly::leading(double rel_tol) const
{
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it)
        if (std::abs(it->second.first) > rel_tol * std::max(it->second.second, 1e-300))
            return std::make_pair(it->first, it->second.first);
    return std::nullopt;
}

GrowthPoly& GrowthPoly::operator+=(const GrowthPoly& o)
{
    for (const auto& [k, cm] : o.terms_)
        add(k, cm.first, cm.second);
    constant_ += o.constant_;
    return *this;
}

GrowthPoly& GrowthPoly::operator*=(cplx s)
{
    for (auto& [k, cm] : terms_) {
        cm.first *= s;
        cm.second *= std::abs(s);
    }
    constant_ *= s;
    return *this;
}

GrowthPoly pair_growth(const WeightAtom& bra, const WeightAtom& ket, const Matrix& m, Kernel kernel, double upper)
{
    // Each component pair contributes its divergent monomial plus an exact finite part:
    // integrable pairs are integrated from 0, divergent ones from t_fp with the head of
    // the next series term restored.
    constexpr double t_fp = 1e-14;
    GrowthPoly g;
    const double shift = kernel_shift(kernel);
    const double mscale = m.norm();
    for (const auto& a : bra.components())
        for (const auto& b : ket.components()) {
            const cplx w = inner(a.vector, m * b.vector);
            if (w == 0.0)
                continue;
            const double e = is_grid(a.profile) || is_grid(b.profile)
                                 ? 0.0
                                 : leading_exponent(a.profile) + leading_exponent(b.profile) + shift;
            if (e > -1.0 + kExpTol) {
                g.add_constant(w * pair_integral(a.profile, b.profile, kernel, {0.0, upper}).value);
                continue;
            }
            const cplx amps = std::conj(leading_coefficient(a.profile)) * leading_coefficient(b.profile);
            const cplx c = w * amps;
            const double mass = std::abs(amps) * norm2(a.vector) * norm2(b.vector) * mscale;
            cplx divergent = 0.0;
            if (std::abs(e + 1.0) <= kExpTol) {
                g.add({0.0, 1}, c, mass);
                divergent = c * std::log(1.0 / t_fp);
            } else {
                const double beta = -(e + 1.0);
                g.add({beta, 0}, c / beta, mass / beta);
                divergent = c / beta * std::pow(t_fp, -beta);
            }
            const double d = first_order(a.profile) + first_order(b.profile) + kernel_first_order(kernel);
            const cplx head = c * d * std::pow(t_fp, e + 2.0) / (e + 2.0);
            g.add_constant(w * pair_integral(a.profile, b.profile, kernel, {t_fp, upper}).value - divergent + head);
        }
    return g;
}

std::optional<cplx> ratio_limit(const GrowthPoly& a, const GrowthPoly& b, double rel_tol)
{
    const auto la = a.leading(rel_tol);
    const auto lb = b.leading(rel_tol);
    if (!lb) {
        if (std::abs(b.constant()) <= 1e-300 || la)
            return std::nullopt;
        return a.constant() / b.constant();
    }
    if (!la || la->first < lb->first)
        return cplx(0.0);
    if (lb->first < la->first)
        return std::nullopt;
    return la->second / lb->second;
}

}  // namespace qw
