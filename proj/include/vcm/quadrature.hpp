#pragma once

#include <vector>

namespace vcm {

/// Gauss-Hermite rule for integrals against exp(-x^2).
///
/// `log_weights` is always finite; `weights` may underflow to zero for the
/// outermost nodes of very high orders (beyond ~300).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> log_weights;
    int order = 0;
};

inline constexpr int kMaxQuadratureOrder = 512;

/// Rule of the given order (1..512). Nodes come from the Golub-Welsch
/// eigenvalue problem, polished by Newton on the orthonormal recurrence.
/// Rules are computed once per order and cached; the returned reference
/// stays valid for the life of the program.
const QuadratureRule& gauss_hermite(int order);

}  // namespace vcm
