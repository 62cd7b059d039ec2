#include "vcm/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "vcm/error.hpp"
#include "vcm/special.hpp"

namespace vcm {

namespace {

struct RecurrenceValue {
    double p_n;        // orthonormal p_n(x), scaled by exp(-log_scale)
    double p_nm1;      // orthonormal p_{n-1}(x), same scale
    double log_scale;
};

// Orthonormal Hermite polynomials w.r.t. exp(-x^2):
//   p_0 = pi^{-1/4},  p_{k+1} = sqrt(2/(k+1)) x p_k - sqrt(k/(k+1)) p_{k-1}.
// Values are rescaled on the fly so order 512 does not overflow.
RecurrenceValue orthonormal_hermite(int n, double x) {
    double prev = 0.0;
    double cur = std::pow(kPi, -0.25);
    double log_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1.0)) * x * cur - std::sqrt(k / (k + 1.0)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > 1e150) {
            cur *= 1e-150;
            prev *= 1e-150;
            log_scale += 150.0 * std::log(10.0);
        }
    }
    return {cur, prev, log_scale};
}

QuadratureRule build_rule(int order) {
    const int n = order;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);

    std::vector<double> nodes(n, 0.0);
    if (n > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        for (int i = 0; i < n; ++i) nodes[i] = solver.eigenvalues()(i);
    }

    QuadratureRule rule;
    rule.order = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    rule.log_weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = nodes[i];
        // p_n'(x) = sqrt(2n) p_{n-1}(x)
        for (int iter = 0; iter < 3 && n > 1; ++iter) {
            const RecurrenceValue v = orthonormal_hermite(n, x);
            const double step = v.p_n / (std::sqrt(2.0 * n) * v.p_nm1);
            x -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        const RecurrenceValue v = orthonormal_hermite(n, x);
        // Christoffel weight: w = 1 / (n p_{n-1}(x)^2)
        const double log_w = -std::log(static_cast<double>(n)) -
                             2.0 * (std::log(std::abs(v.p_nm1)) + v.log_scale);
        rule.nodes[i] = x;
        rule.log_weights[i] = n == 1 ? 0.5 * std::log(kPi) : log_w;
        rule.weights[i] = std::exp(rule.log_weights[i]);
    }
    // Enforce exact symmetry about zero.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double lw = 0.5 * (rule.log_weights[i] + rule.log_weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.log_weights[i] = rule.log_weights[j] = lw;
        rule.weights[i] = rule.weights[j] = std::exp(lw);
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

const QuadratureRule& gauss_hermite(int order) {
    if (order < 1 || order > kMaxQuadratureOrder) {
        throw ConfigError("gauss_hermite: order must be in [1, " + std::to_string(kMaxQuadratureOrder) +
                          "], got " + std::to_string(order));
    }
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, std::make_unique<QuadratureRule>(build_rule(order))).first;
    }
    return *it->second;
}

}  // namespace vcm
