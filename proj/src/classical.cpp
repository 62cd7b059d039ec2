#include "vcm/classical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vcm/error.hpp"
#include "vcm/optimize.hpp"
#include "vcm/special.hpp"

namespace vcm {

std::string_view to_string(Method method) {
    switch (method) {
        case Method::MM: return "MM";
        case Method::CMM: return "CMM";
        case Method::AMLE: return "AMLE";
        case Method::MLE: return "MLE";
        case Method::BAYES: return "BAYES";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    std::string upper(name);
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (Method m : {Method::MM, Method::CMM, Method::AMLE, Method::MLE, Method::BAYES}) {
        if (upper == to_string(m)) return m;
    }
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool EstimateReport::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

// ---------------------------------------------------------------------------
// Mixture likelihood

namespace {

// h(z) = d log pi(z) + (n-d) log(1 - pi(z)) - z^2/2 with pi(z) = Phi(a - b z).
struct MixtureIntegrand {
    double a;
    double b;
    double d;
    double nd;  // n - d

    double value(double z) const {
        const double u = a - b * z;
        double h = -0.5 * z * z;
        if (std::abs(u) < 30.0) {
            // One erfc for both tails: the smaller probability directly, the
            // larger through log1p.
            const double small = 0.5 * std::erfc(std::abs(u) / kSqrt2);
            const double log_small = std::log(small);
            const double log_large = std::log1p(-small);
            if (d > 0) h += d * (u < 0.0 ? log_small : log_large);
            if (nd > 0) h += nd * (u < 0.0 ? log_large : log_small);
            return h;
        }
        if (d > 0) h += d * log_norm_cdf(u);
        if (nd > 0) h += nd * log_norm_cdf(-u);
        return h;
    }

    void derivatives(double z, double& first, double& second) const {
        const double u = a - b * z;
        first = -z;
        second = -1.0;
        if (d > 0) {
            const double lam = inverse_mills(u);
            first -= b * d * lam;
            second -= b * b * d * lam * (u + lam);
        }
        if (nd > 0) {
            const double lam = inverse_mills(-u);
            first += b * nd * lam;
            second -= b * b * nd * lam * (lam - u);
        }
    }

    double third(double z) const {
        // lambda'' = -lambda + lambda' (-v - 2 lambda), lambda' = -lambda (v + lambda).
        auto lam2 = [](double v) {
            const double lam = inverse_mills(v);
            const double lam1 = -lam * (v + lam);
            return -lam + lam1 * (-v - 2.0 * lam);
        };
        const double u = a - b * z;
        double out = 0.0;
        if (d > 0) out -= b * b * b * d * lam2(u);
        if (nd > 0) out += b * b * b * nd * lam2(-u);
        return out;
    }
};

// Mode of a strictly concave h by bracketed Newton.
double find_mode(const MixtureIntegrand& h) {
    double d1 = 0.0;
    double d2 = 0.0;
    h.derivatives(0.0, d1, d2);
    double lo = 0.0;
    double hi = 0.0;
    if (d1 > 0.0) {
        double step = 1.0;
        hi = step;
        for (int i = 0; i < 60; ++i) {
            h.derivatives(hi, d1, d2);
            if (d1 <= 0.0) break;
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        double step = 1.0;
        lo = -step;
        for (int i = 0; i < 60; ++i) {
            h.derivatives(lo, d1, d2);
            if (d1 >= 0.0) break;
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }
    double z = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
        h.derivatives(z, d1, d2);
        if (d1 > 0.0) lo = z; else hi = z;
        double next = z - d1 / d2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - z) < 1e-12 * (1.0 + std::abs(z))) return next;
        z = next;
        if (hi - lo < 1e-14 * (1.0 + std::abs(z))) break;
    }
    return z;
}

}  // namespace

double loglik_point(std::int64_t d, std::int64_t n, const VasicekParams& params, const QuadratureRule& rule) {
    if (n < 1 || d < 0 || d > n) throw ValidationError("loglik_point: need 0 <= d <= n and n >= 1");
    const double rho = params.rho();
    const MixtureIntegrand h{params.threshold() / std::sqrt(1.0 - rho), std::sqrt(rho / (1.0 - rho)),
                             static_cast<double>(d), static_cast<double>(n - d)};
    const double mode = find_mode(h);
    double d1 = 0.0;
    double d2 = 0.0;
    h.derivatives(mode, d1, d2);
    const double scale = kSqrt2 / std::sqrt(-d2);  // sqrt(2) * sigma
    // Skewed map z = mode + scale (x + c (sqrt(1 + x^2) - 1)); c cancels the
    // cubic term of h at the mode so the integrand in x is closer to Gaussian.
    const double c = std::clamp(h.third(mode) * scale * scale * scale / 9.0, -0.6, 0.6);

    auto integrate = [&](const QuadratureRule& r) {
        std::vector<double> terms(r.nodes.size());
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double x = r.nodes[i];
            const double root = std::sqrt(1.0 + x * x);
            const double z = mode + scale * (x + c * (root - 1.0));
            terms[i] = r.log_weights[i] + x * x + h.value(z) + std::log1p(c * x / root);
        }
        return log_sum_exp(terms);
    };
    // Self-check against the half-order rule; on disagreement the order is
    // doubled until two successive results agree.
    double log_integral = integrate(rule);
    double previous = rule.order >= 2 ? integrate(gauss_hermite(rule.order / 2)) : log_integral;
    for (int order = rule.order * 2;
         std::abs(log_integral - previous) >= kQuadratureSelfCheckTol && order <= kMaxQuadratureOrder; order *= 2) {
        previous = log_integral;
        log_integral = integrate(gauss_hermite(order));
    }
    const double result = log_binomial_coefficient(n, d) + std::log(scale) - kLogSqrt2Pi + log_integral;
    if (!std::isfinite(result)) {
        std::ostringstream msg;
        msg << "loglik_point: non-finite value (d=" << d << ", n=" << n << ", p=" << params.p()
            << ", rho=" << rho << ", mode=" << mode << ", curvature=" << d2 << ")";
        throw NumericalError(msg.str());
    }
    return std::min(result, 0.0);
}

double mixture_loglik(const DefaultSeries& series, const VasicekParams& params, const QuadratureRule& rule) {
    double total = 0.0;
    for (const Period& period : series.periods) {
        total += loglik_point(period.n_defaults, period.n_credits, params, rule);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

void check_bounds(const ParameterBounds& b) {
    auto inside = [](double lo, double hi) { return lo > 0.0 && hi < 1.0 && lo < hi; };
    if (!inside(b.p_lo, b.p_hi) || !inside(b.rho_lo, b.rho_hi)) {
        throw ConfigError("parameter bounds must be ordered open sub-intervals of (0, 1)");
    }
}

double to_box(double theta, double lo, double hi) { return lo + (hi - lo) * inv_logit(theta); }

double from_box(double x, double lo, double hi) {
    const double u = std::clamp((x - lo) / (hi - lo), 1e-12, 1.0 - 1e-12);
    return logit(u);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Solves Var(p, rho) = target for rho by bisection.
double invert_variance(double p, double target, const ParameterBounds& bounds, std::vector<std::string>& flags) {
    const double k = norm_quantile(p);
    auto variance = [&](double rho) { return binorm_excess(k, k, rho); };
    double lo = bounds.rho_lo;
    double hi = bounds.rho_hi;
    if (!(target > variance(lo))) {
        flags.emplace_back("rho_at_lower_bound");
        return lo;
    }
    if (target >= variance(hi)) {
        flags.emplace_back("rho_at_upper_bound");
        return hi;
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (variance(mid) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

EstimateReport fit_mm_impl(const DefaultSeries& series, bool corrected, const ParameterBounds& bounds) {
    check_bounds(bounds);
    EstimateReport report;
    report.method = corrected ? Method::CMM : Method::MM;
    const std::vector<double> rates = default_rates(series);
    const double t = static_cast<double>(rates.size());
    const double mean = mean_of(rates);
    double ss = 0.0;
    for (double r : rates) ss += (r - mean) * (r - mean);
    double variance = ss / (t - 1.0);

    double p = mean;
    if (p < bounds.p_lo || p > bounds.p_hi) {
        p = std::clamp(p, bounds.p_lo, bounds.p_hi);
        report.flags.emplace_back("p_at_bound");
        report.convergence_flag = false;
    }
    if (corrected) {
        double noise = 0.0;
        for (const Period& period : series.periods) noise += p * (1.0 - p) / static_cast<double>(period.n_credits);
        variance -= noise / t;
        if (variance <= 0.0) {
            report.flags.emplace_back("corrected_variance_nonpositive");
            variance = 1e-300;
        }
    }
    report.p_hat = p;
    report.rho_hat = invert_variance(p, variance, bounds, report.flags);
    if (report.has_flag("rho_at_lower_bound") || report.has_flag("rho_at_upper_bound")) {
        report.convergence_flag = false;
    }
    return report;
}

EstimateReport fit_amle_impl(const DefaultSeries& series, const ParameterBounds& bounds) {
    check_bounds(bounds);
    EstimateReport report;
    report.method = Method::AMLE;
    std::vector<double> clamped;
    std::vector<double> probits;
    bool any_clamped = false;
    for (const Period& period : series.periods) {
        const double n = static_cast<double>(period.n_credits);
        const double half = 0.5 / n;
        double rate = static_cast<double>(period.n_defaults) / n;
        if (rate < half || rate > 1.0 - half) {
            rate = std::clamp(rate, half, 1.0 - half);
            any_clamped = true;
        }
        clamped.push_back(rate);
        probits.push_back(norm_quantile(rate));
    }
    if (any_clamped) report.flags.emplace_back("boundary_rates_clamped");

    const double t = static_cast<double>(probits.size());
    const double mean = mean_of(probits);
    double ss = 0.0;
    for (double u : probits) ss += (u - mean) * (u - mean);
    const double s2 = ss / t;

    // Profile likelihood: k = sqrt(1-rho) * mean(u), rho = s2 / (1 + s2).
    double rho = s2 / (1.0 + s2);
    if (!(rho > bounds.rho_lo)) {
        rho = bounds.rho_lo;
        report.flags.emplace_back("rho_at_lower_bound");
        report.convergence_flag = false;
    } else if (rho > bounds.rho_hi) {
        rho = bounds.rho_hi;
        report.flags.emplace_back("rho_at_upper_bound");
        report.convergence_flag = false;
    }
    double p = norm_cdf(std::sqrt(1.0 - rho) * mean);
    if (p < bounds.p_lo || p > bounds.p_hi) {
        p = std::clamp(p, bounds.p_lo, bounds.p_hi);
        report.flags.emplace_back("p_at_bound");
        report.convergence_flag = false;
    }
    report.p_hat = p;
    report.rho_hat = rho;
    const VasicekParams params(p, rho);
    double loglik = 0.0;
    for (double x : clamped) loglik += vasicek_logpdf(x, params);
    report.log_likelihood = loglik;
    return report;
}

EstimateReport fit_mle_impl(const DefaultSeries& series, const MleSettings& settings) {
    check_bounds(settings.bounds);
    if (settings.max_iter < 1 || !(settings.tol > 0.0)) throw ConfigError("MleSettings: max_iter and tol must be positive");
    const ParameterBounds& b = settings.bounds;
    const QuadratureRule& rule = gauss_hermite(settings.quad_order);

    EstimateReport report;
    report.method = Method::MLE;

    auto objective_at = [&](double p, double rho) {
        try {
            return -mixture_loglik(series, VasicekParams(p, rho), rule);
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const bool all_zero = std::all_of(series.periods.begin(), series.periods.end(),
                                      [](const Period& q) { return q.n_defaults == 0; });
    NelderMeadOptions options;
    options.max_iter = settings.max_iter;
    options.f_tol = settings.tol;

    if (all_zero) {
        // Likelihood increases monotonically as p -> 0; pin p to the box.
        report.p_hat = b.p_lo;
        auto f1 = [&](const std::vector<double>& th) { return objective_at(b.p_lo, to_box(th[0], b.rho_lo, b.rho_hi)); };
        const NelderMeadResult r = nelder_mead(f1, {from_box(0.2, b.rho_lo, b.rho_hi)}, options);
        report.rho_hat = to_box(r.x[0], b.rho_lo, b.rho_hi);
        report.log_likelihood = -r.value;
        report.convergence_flag = false;
        report.flags.emplace_back("all_zero_defaults");
        report.flags.emplace_back("p_at_lower_bound");
        return report;
    }

    auto f = [&](const std::vector<double>& th) {
        return objective_at(to_box(th[0], b.p_lo, b.p_hi), to_box(th[1], b.rho_lo, b.rho_hi));
    };

    struct Start {
        double value;
        std::vector<double> theta;
    };
    std::vector<Start> starts;
    std::size_t n_starts = 5;
    if (settings.warm_start) {
        const double pc = std::clamp(settings.warm_start->p(), b.p_lo * 1.01, b.p_hi * 0.99);
        const double rc = std::clamp(settings.warm_start->rho(), b.rho_lo * 1.01, b.rho_hi * 0.99);
        std::vector<double> theta = {from_box(pc, b.p_lo, b.p_hi), from_box(rc, b.rho_lo, b.rho_hi)};
        starts.push_back({f(theta), theta});
        n_starts = 1;
        options.initial_step = 0.1;
    } else {
        const std::vector<double> rates = default_rates(series);
        const double mean_rate = std::clamp(mean_of(rates), 10.0 * b.p_lo, 0.5);
        const double p_grid[] = {0.5 * mean_rate, mean_rate, 1.5 * mean_rate, 2.5 * mean_rate};
        const double rho_grid[] = {0.05, 0.15, 0.35, 0.6};
        for (double p : p_grid) {
            for (double rho : rho_grid) {
                const double pc = std::clamp(p, b.p_lo * 1.01, b.p_hi * 0.99);
                const double rc = std::clamp(rho, b.rho_lo * 1.01, b.rho_hi * 0.99);
                std::vector<double> theta = {from_box(pc, b.p_lo, b.p_hi), from_box(rc, b.rho_lo, b.rho_hi)};
                starts.push_back({f(theta), theta});
            }
        }
        std::stable_sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.value < y.value; });
    }

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_starts && i < starts.size(); ++i) {
        NelderMeadResult r = nelder_mead(f, starts[i].theta, options);
        if (r.value < best.value) best = std::move(r);
    }
    if (!std::isfinite(best.value)) throw NumericalError("fit_mle: objective is non-finite at every start");
    report.p_hat = to_box(best.x[0], b.p_lo, b.p_hi);
    report.rho_hat = to_box(best.x[1], b.rho_lo, b.rho_hi);
    report.log_likelihood = -best.value;
    report.convergence_flag = best.converged;
    if (!best.converged) report.flags.emplace_back("iteration_cap");
    const double edge = 1e-6;
    if (report.rho_hat - b.rho_lo < edge * (b.rho_hi - b.rho_lo)) report.flags.emplace_back("rho_at_lower_bound");
    if (b.rho_hi - report.rho_hat < edge * (b.rho_hi - b.rho_lo)) report.flags.emplace_back("rho_at_upper_bound");
    return report;
}

}  // namespace

EstimateReport fit_mle(const DefaultSeries& series, const MleSettings& settings) {
    validate(series, kMinEstimationLength);
    return fit_mle_impl(series, settings);
}

EstimateReport fit_amle(const DefaultSeries& series, const ParameterBounds& bounds) {
    validate(series, kMinEstimationLength);
    return fit_amle_impl(series, bounds);
}

EstimateReport fit_mm(const DefaultSeries& series, bool corrected, const ParameterBounds& bounds) {
    validate(series, kMinEstimationLength);
    return fit_mm_impl(series, corrected, bounds);
}

EstimateReport estimate(const DefaultSeries& series, Method method, const MleSettings& settings) {
    validate(series, kMinEstimationLength);
    return detail::estimate_unchecked(series, method, settings);
}

namespace detail {

EstimateReport estimate_unchecked(const DefaultSeries& series, Method method, const MleSettings& settings) {
    validate(series, 2);
    switch (method) {
        case Method::MM: return fit_mm_impl(series, false, settings.bounds);
        case Method::CMM: return fit_mm_impl(series, true, settings.bounds);
        case Method::AMLE: return fit_amle_impl(series, settings.bounds);
        case Method::MLE: return fit_mle_impl(series, settings);
        case Method::BAYES: break;
    }
    throw ConfigError("estimate: BAYES is not a classical method; use nuts_sample");
}

}  // namespace detail

}  // namespace vcm
