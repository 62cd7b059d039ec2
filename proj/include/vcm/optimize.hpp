#pragma once

#include <functional>
#include <vector>

namespace vcm {

struct NelderMeadOptions {
    int max_iter = 2000;
    double f_tol = 1e-8;    // spread of simplex values
    double x_tol = 1e-7;    // simplex diameter (max-norm)
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimises f from x0 with the standard reflection/expansion/contraction/
/// shrink coefficients (1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace vcm
