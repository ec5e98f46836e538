#pragma once

#include <functional>

namespace qw {

// Upper incomplete gamma function Gamma(a, x) for real a and x > 0 (x = 0 allowed when a > 0).
double upper_gamma(double a, double x);

// Exponential integral E1(x) = Gamma(0, x), x > 0.
double expint_e1(double x);

struct QuadratureOptions {
    double rel_tol = 1e-11;
    double abs_tol = 1e-300;
    int max_depth = 60;
};

// Adaptive Simpson on a finite interval.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& opts = {});

}  // namespace qw
