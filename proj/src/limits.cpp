#include "qw/limits.hpp"

#include <algorithm>
#include <cmath>

namespace qw {

namespace {

cplx neville_at_zero(const std::vector<double>& s, std::vector<cplx> y)
{
    const std::size_t n = s.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            y[i] = (s[i + level] * y[i] - s[i] * y[i + 1]) / (s[i + level] - s[i]);
    return y[0];
}

}  // namespace

LogScaleLimit log_scale_limit(const std::function<std::vector<cplx>(double ell)>& f, double max_power)
{
    constexpr int n = 6;
    const double hi = max_power > 1e-9 ? 300.0 / max_power : 1e4;
    const double lo = hi / 3.0;
    std::vector<double> s;
    std::vector<std::vector<cplx>> samples;
    for (int j = 0; j < n; ++j) {
        const double ell = lo * std::pow(hi / lo, static_cast<double>(j) / (n - 1));
        s.push_back(1.0 / ell);
        samples.push_back(f(ell));
    }
    const std::size_t m = samples.front().size();
    LogScaleLimit out;
    out.value.resize(m);
    const std::vector<double> tail(s.begin() + 1, s.end());
    for (std::size_t c = 0; c < m; ++c) {
        std::vector<cplx> y;
        for (const auto& row : samples)
            y.push_back(row[c]);
        out.value[c] = neville_at_zero(s, y);
        const cplx coarse = neville_at_zero(tail, std::vector<cplx>(y.begin() + 1, y.end()));
        out.spread = std::max(out.spread, std::abs(out.value[c] - coarse));
    }
    return out;
}

}  // namespace qw
