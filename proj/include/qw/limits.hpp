#pragma once

#include <functional>
#include <vector>

#include "qw/matrix.hpp"

namespace qw {

struct LogScaleLimit {
    std::vector<cplx> value;
    double spread = 0.0;  // disagreement between the 6- and 5-point extrapolants
};

// Limit as t -> 0+ of a function built from small-t expansions (GrowthPoly::at_log), sampled at
// t = e^{-ell}. Power-law terms saturate at the sampled depths; logarithmic ones are removed by
// polynomial extrapolation in 1/ell. max_power is the largest power exponent present.
LogScaleLimit log_scale_limit(const std::function<std::vector<cplx>(double ell)>& f, double max_power);

}  // namespace qw
