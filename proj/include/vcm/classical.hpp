#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/quadrature.hpp"
#include "vcm/series.hpp"
#include "vcm/vasicek.hpp"

namespace vcm {

enum class Method { MM, CMM, AMLE, MLE, BAYES };

std::string_view to_string(Method method);
/// Case-insensitive; throws ConfigError on unknown names.
Method parse_method(std::string_view name);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    double width() const noexcept { return hi - lo; }
};

/// Output of every estimator, classical or Bayesian.
///
/// For bias-corrected bootstrap points lo <= point <= hi need not hold.
struct EstimateReport {
    Method method = Method::MM;
    double p_hat = 0.0;
    double rho_hat = 0.0;
    std::optional<Interval> interval_p;
    std::optional<Interval> interval_rho;
    double interval_level = 0.95;
    std::size_t n_bootstrap = 0;
    bool convergence_flag = true;
    std::optional<double> log_likelihood;
    /// Machine-readable markers such as "rho_at_lower_bound".
    std::vector<std::string> flags;
    /// Bootstrap only: share of replicates whose base fit was flagged.
    double failure_fraction = 0.0;
    /// Bootstrap only: raw replicate estimates in replicate order.
    std::vector<double> replicates_p;
    std::vector<double> replicates_rho;

    bool has_flag(std::string_view flag) const;
};

/// Parameter box shared by the classical estimators. Estimates always land
/// inside it, hence strictly inside (0, 1).
struct ParameterBounds {
    double p_lo = 1e-6;
    double p_hi = 1.0 - 1e-6;
    double rho_lo = 1e-6;
    double rho_hi = 1.0 - 1e-6;
};

struct MleSettings {
    int quad_order = 64;
    int max_iter = 2000;
    double tol = 1e-8;
    ParameterBounds bounds{};
    /// When set, a single Nelder-Mead run starts here instead of the grid
    /// restarts. The bootstrap uses it to start replicates at the
    /// full-sample estimate.
    std::optional<VasicekParams> warm_start;
};

/// log f(d; n, p, rho), the binomial-Vasicek mixture pmf. The integral over
/// the factor is evaluated with the Gauss-Hermite rule re-centred at the
/// integrand's mode, scaled by its curvature and skewed to match its third
/// derivative, entirely in log space.
/// The result is checked against the half-order rule; if the two differ by
/// kQuadratureSelfCheckTol or more the order is doubled until two successive
/// results agree (or the maximum order is reached). `rule` therefore sets
/// the minimum order. Throws NumericalError on a non-finite result.
inline constexpr double kQuadratureSelfCheckTol = 1e-10;

double loglik_point(std::int64_t d, std::int64_t n, const VasicekParams& params, const QuadratureRule& rule);

/// Sum of loglik_point over all periods.
double mixture_loglik(const DefaultSeries& series, const VasicekParams& params, const QuadratureRule& rule);

/// Full binomial-mixture maximum likelihood (Nelder-Mead in logit space,
/// restarted from the best 5 cells of a 4x4 grid).
EstimateReport fit_mle(const DefaultSeries& series, const MleSettings& settings = {});

/// Asymptotic MLE: maximises sum_t log f_Vas(rate_t; p, rho) with boundary
/// rates clamped to [1/(2N_t), 1 - 1/(2N_t)]. Closed form.
EstimateReport fit_amle(const DefaultSeries& series, const ParameterBounds& bounds = {});

/// Method of moments. With `corrected`, the sample variance is first reduced
/// by the mean binomial sampling noise (1/T) sum p(1-p)/N_t.
EstimateReport fit_mm(const DefaultSeries& series, bool corrected, const ParameterBounds& bounds = {});

/// Dispatches on the method tag (MM, CMM, AMLE, MLE).
EstimateReport estimate(const DefaultSeries& series, Method method, const MleSettings& settings = {});

namespace detail {
/// As estimate(), but accepts series down to two periods (jackknife use).
EstimateReport estimate_unchecked(const DefaultSeries& series, Method method, const MleSettings& settings);
}  // namespace detail

}  // namespace vcm
