#include "qw/flowsim.hpp"

#include <cmath>

#include "qw/errors.hpp"

namespace qw {

namespace {

double kernel_at(Kernel k, double x)
{
    switch (k) {
    case Kernel::One: return 1.0;
    case Kernel::ExpNeg: return std::exp(-x);
    case Kernel::OneMinusExp: return -std::expm1(-x);
    }
    return 1.0;
}

Matrix block(const Matrix& a, std::size_t k, std::size_t r, std::size_t c)
{
    Matrix out(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            out(i, j) = a(r * k + i, c * k + j);
    return out;
}

void check_square(const DiscretizedH& h, const Matrix& a)
{
    if (a.rows() != h.size() || a.cols() != h.size())
        throw Error(ErrorKind::DimensionMismatch, "operator does not act on the discretized space");
}

// rho with tr(rho B) = eta(B (x) Lambda) for block-diagonal eta.
Matrix lambda_hat(const DiscretizedH& h, const std::vector<Matrix>& eta_blocks)
{
    Matrix rho(h.k(), h.k());
    for (std::size_t j = 0; j < h.m(); ++j)
        rho += std::exp(-h.point(j)) * eta_blocks[j];
    return rho;
}

cplx block_trace(const std::vector<Matrix>& eta, const BlockDiagonal& b)
{
    cplx v = 0.0;
    for (std::size_t j = 0; j < eta.size(); ++j)
        v += (eta[j] * b[j]).trace();
    return v;
}

}  // namespace

DiscretizedH::DiscretizedH(std::size_t k, std::size_t m, double horizon) : k_(k), m_(m), horizon_(horizon)
{
    if (k == 0 || m == 0 || !(horizon > 0.0))
        throw Error(ErrorKind::PreconditionViolated, "discretization needs k, m > 0 and a positive horizon");
}

Matrix DiscretizedH::shift() const
{
    Matrix s(size(), size());
    for (std::size_t j = 0; j + 1 < m_; ++j)
        for (std::size_t a = 0; a < k_; ++a)
            s((j + 1) * k_ + a, j * k_ + a) = 1.0;
    return s;
}

Matrix DiscretizedH::lambda() const
{
    Matrix l(size(), size());
    for (std::size_t j = 0; j < m_; ++j)
        for (std::size_t a = 0; a < k_; ++a)
            l(j * k_ + a, j * k_ + a) = std::exp(-point(j));
    return l;
}

Matrix DiscretizedH::tail_projection(double t) const
{
    Matrix p(size(), size());
    for (std::size_t j = 0; j < m_; ++j)
        if (point(j) > t)
            for (std::size_t a = 0; a < k_; ++a)
                p(j * k_ + a, j * k_ + a) = 1.0;
    return p;
}

CVector DiscretizedH::sample(const WeightAtom& atom) const
{
    if (atom.dim() != k_)
        throw Error(ErrorKind::DimensionMismatch, "atom dimension differs from the discretization");
    CVector v(size());
    const double w = std::sqrt(step());
    for (std::size_t j = 0; j < m_; ++j) {
        const CVector x = atom.value(point(j));
        for (std::size_t a = 0; a < k_; ++a)
            v[j * k_ + a] = w * x[a];
    }
    return v;
}

BlockDiagonal discretize(const DiscretizedH& h, const StructuredObservable& obs, double from)
{
    if (obs.op().rows() != h.k())
        throw Error(ErrorKind::DimensionMismatch, "observable dimension differs from the discretization");
    const auto terms = obs.lowered();
    const Window w = obs.window();
    BlockDiagonal out(h.m(), Matrix(h.k(), h.k()));
    for (std::size_t j = 0; j < h.m(); ++j) {
        const double x = h.point(j);
        if (x < std::max(w.lower, from) || x >= w.upper)
            continue;
        for (const auto& t : terms)
            out[j] += kernel_at(t.kernel, x) * t.op;
    }
    return out;
}

Matrix gamma_disc(const DiscretizedH& h, const Matrix& a)
{
    check_square(h, a);
    const std::size_t k = h.k();
    const double d = h.step();
    const double decay = std::exp(-d);
    // Gamma(r, c) = d A(r, c) + e^{-d} Gamma(r - 1, c - 1) blockwise.
    Matrix g(h.size(), h.size());
    for (std::size_t r = 0; r < h.m(); ++r)
        for (std::size_t c = 0; c < h.m(); ++c)
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    cplx v = d * a(r * k + i, c * k + j);
                    if (r > 0 && c > 0)
                        v += decay * g((r - 1) * k + i, (c - 1) * k + j);
                    g(r * k + i, c * k + j) = v;
                }
    return g;
}

BlockDiagonal gamma_disc(const DiscretizedH& h, const BlockDiagonal& a)
{
    if (a.size() != h.m())
        throw Error(ErrorKind::DimensionMismatch, "block count differs from the grid");
    const double d = h.step();
    const double decay = std::exp(-d);
    BlockDiagonal g(h.m());
    for (std::size_t j = 0; j < h.m(); ++j)
        g[j] = j == 0 ? d * a[0] : d * a[j] + decay * g[j - 1];
    return g;
}

Matrix resolvent_from_weight(const DiscretizedH& h, const QWeightMap& qw, const Matrix& eta)
{
    check_square(h, eta);
    if (qw.dim() != h.k())
        throw Error(ErrorKind::DimensionMismatch, "map dimension differs from the discretization");
    const std::size_t k = h.k();
    std::vector<Matrix> diag;
    for (std::size_t j = 0; j < h.m(); ++j)
        diag.push_back(block(eta, k, j, j));
    const Matrix rho = lambda_hat(h, diag);

    // Density of omega(rho): sum_p tr(rho W_p) |phi_j><phi_i|.
    const FiniteForm form = finite_form(qw);
    std::vector<CVector> samples;
    for (const auto& atom : form.atoms)
        samples.push_back(h.sample(atom));
    Matrix p = eta;
    for (const auto& pair : form.pairs) {
        const cplx c = (rho * pair.target).trace();
        if (c == cplx{})
            continue;
        p += c * Matrix::outer(samples[pair.ket], samples[pair.bra]);
    }

    // Predual of Gamma: sum_j e^{-j d} d S*^j P S^j, recursively from the far corner.
    const double d = h.step();
    const double decay = std::exp(-d);
    const std::size_t m = h.m();
    Matrix r(h.size(), h.size());
    for (std::size_t rr = m; rr-- > 0;)
        for (std::size_t cc = m; cc-- > 0;)
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    cplx v = d * p(rr * k + i, cc * k + j);
                    if (rr + 1 < m && cc + 1 < m)
                        v += decay * r((rr + 1) * k + i, (cc + 1) * k + j);
                    r(rr * k + i, cc * k + j) = v;
                }
    return r;
}

cplx discretized_weight(const DiscretizedH& h, const QWeightMap& qw, const Matrix& rho, const BlockDiagonal& b)
{
    const FiniteForm form = finite_form(qw);
    std::vector<CVector> samples;
    for (const auto& atom : form.atoms)
        samples.push_back(h.sample(atom));
    const std::size_t k = h.k();
    cplx total = 0.0;
    for (const auto& pair : form.pairs) {
        const cplx c = (rho * pair.target).trace();
        if (c == cplx{})
            continue;
        const CVector& u = samples[pair.bra];
        const CVector& v = samples[pair.ket];
        cplx s = 0.0;
        for (std::size_t j = 0; j < h.m(); ++j)
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t bb = 0; bb < k; ++bb)
                    s += std::conj(u[j * k + a]) * b[j](a, bb) * v[j * k + bb];
        total += c * s;
    }
    return total;
}

std::vector<Matrix> pullback_blocks(const DiscretizedH& h, const Matrix& rho, Pullback kind)
{
    std::vector<Matrix> out(h.m(), Matrix(h.k(), h.k()));
    if (kind == Pullback::Concentrated) {
        out[0] = std::exp(h.point(0)) * rho;
        return out;
    }
    const std::size_t n = std::min<std::size_t>(h.m(), 10);
    double mass = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        mass += std::exp(-h.point(j));
    for (std::size_t j = 0; j < n; ++j)
        out[j] = (1.0 / mass) * rho;
    return out;
}

Recovery recover_omega(const DiscretizedH& h, const QWeightMap& qw, const Matrix& rho, double x,
                       const StructuredObservable& obs, Pullback pullback)
{
    const double d = h.step();
    const double cells = std::round(x / d);
    if (x < 0.0 || std::abs(cells * d - x) > 1e-9 * std::max(1.0, x) || cells >= static_cast<double>(h.m()))
        throw Error(ErrorKind::PreconditionViolated, "x must be a grid multiple inside the horizon");
    const BlockDiagonal t = discretize(h, obs, x);

    // (T - e^{-d} S T S*) / d; S T S* moves block j - 1 to block j.
    BlockDiagonal diff(h.m());
    for (std::size_t j = 0; j < h.m(); ++j) {
        diff[j] = (1.0 / d) * t[j];
        if (j > 0)
            diff[j] -= (std::exp(-d) / d) * t[j - 1];
    }
    const BlockDiagonal g = gamma_disc(h, diff);
    const std::vector<Matrix> eta = pullback_blocks(h, rho, pullback);
    const Matrix eta_rho = lambda_hat(h, eta);
    // R^(eta)(B) = omega(Lambda^ eta)(Gamma(B)) + eta(Gamma(B)); the second term is subtracted.
    const cplx resolvent = discretized_weight(h, qw, eta_rho, g) + block_trace(eta, g);
    const cplx recovered = resolvent - block_trace(eta, g);

    Recovery out;
    out.recovered = recovered.real();
    const Window w = obs.window();
    out.direct = (rho * dualized(finite_form(qw), obs.lowered(), {std::max(w.lower, x), w.upper})).trace().real();
    out.rel_err = std::abs(out.recovered - out.direct) / std::max(std::abs(out.direct), 1e-300);
    if (out.direct == 0.0)
        out.rel_err = std::abs(out.recovered);
    return out;
}

std::vector<std::string> horizon_warnings(const QWeightMap& qw)
{
    std::vector<std::string> out;
    const FiniteForm form = finite_form(qw);
    for (std::size_t i = 0; i < form.atoms.size(); ++i)
        for (const auto& c : form.atoms[i].components())
            if (const auto* p = std::get_if<PowerExp>(&c.profile); p && p->decay < 0.2)
                out.push_back("atom " + std::to_string(i) + " decays at rate " + std::to_string(p->decay)
                              + "; horizon truncation may be visible");
    return out;
}

}  // namespace qw
