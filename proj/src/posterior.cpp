#include "vcm/posterior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "vcm/error.hpp"
#include "vcm/special.hpp"

namespace vcm {

void PriorConfig::validate() const {
    auto inside = [](double x) { return std::isfinite(x) && x > 0.0 && x < 1.0; };
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!inside(mu_p)) throw ConfigError("prior.mu_p must lie in (0, 1)");
    if (!inside(mu_rho)) throw ConfigError("prior.mu_rho must lie in (0, 1)");
    if (!positive(phi_rho)) throw ConfigError("prior.phi_rho must be positive");
    if (!positive(a)) throw ConfigError("prior.a must be positive");
}

std::string_view to_string(Parameterization parameterization) {
    switch (parameterization) {
        case Parameterization::noncentered: return "noncentered";
        case Parameterization::centered: return "centered";
        case Parameterization::automatic: return "auto";
    }
    return "?";
}

Parameterization resolve_parameterization(Parameterization parameterization, bool include_likelihood) {
    if (parameterization != Parameterization::automatic) return parameterization;
    return include_likelihood ? Parameterization::centered : Parameterization::noncentered;
}

Parameterization parse_parameterization(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "centered" || lower == "probit") return Parameterization::centered;
    if (lower == "noncentered" || lower == "non-centered") return Parameterization::noncentered;
    if (lower == "auto" || lower == "automatic") return Parameterization::automatic;
    throw ConfigError("unknown parameterization '" + std::string(name) + "'");
}

std::vector<double> UnconstrainedState::flatten() const {
    std::vector<double> q;
    q.reserve(zs.size() + 2);
    q.push_back(theta_p);
    q.push_back(theta_rho);
    q.insert(q.end(), zs.begin(), zs.end());
    return q;
}

UnconstrainedState UnconstrainedState::unflatten(std::span<const double> q) {
    if (q.size() < 2) throw DomainError("unconstrained state needs at least 2 coordinates");
    UnconstrainedState s;
    s.theta_p = q[0];
    s.theta_rho = q[1];
    s.zs.assign(q.begin() + 2, q.end());
    return s;
}

double LogDensityModel::log_density(std::span<const double> q) const {
    std::vector<double> grad(dimension());
    return log_density_gradient(q, grad);
}

namespace {

// log inv_logit(x) without overflow.
double log_inv_logit(double x) {
    return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

double clamp_open(double x) {
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(x, lo, hi);
}

}  // namespace

VasicekPosterior::VasicekPosterior(DefaultSeries series, PriorConfig prior, PosteriorOptions options)
    : series_(std::move(series)), prior_(prior), options_(options) {
    options_.parameterization = resolve_parameterization(options_.parameterization, options_.include_likelihood);
    prior_.validate();
    if (!series_.empty()) validate(series_);
    log_choose_.reserve(series_.size());
    for (const Period& period : series_.periods) {
        log_choose_.push_back(log_binomial_coefficient(period.n_credits, period.n_defaults));
    }
}

double VasicekPosterior::log_density_gradient(std::span<const double> q, std::span<double> grad) const {
    return evaluate(q, grad, nullptr);
}

LogPosteriorTerms VasicekPosterior::terms(std::span<const double> q) const {
    LogPosteriorTerms t;
    evaluate(q, {}, &t);
    return t;
}

double VasicekPosterior::evaluate(std::span<const double> q, std::span<double> grad,
                                  LogPosteriorTerms* terms) const {
    const std::size_t T = series_.size();
    if (q.size() != T + 2) throw DomainError("state dimension does not match series length");
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != q.size()) throw DomainError("gradient buffer has wrong size");

    auto reject = [&]() {
        if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
        return kLogZero;
    };
    if (!std::all_of(q.begin(), q.end(), [](double x) { return std::isfinite(x); })) return reject();

    const double theta_p = q[0];
    const double theta_rho = q[1];
    const double p = inv_logit(theta_p);
    const double rho = inv_logit(theta_rho);
    if (!(p > 0.0 && p < 1.0 && rho > 0.0 && rho < 1.0)) return reject();

    const double log_p = log_inv_logit(theta_p);
    const double log_1mp = log_inv_logit(-theta_p);
    const double log_rho = log_inv_logit(theta_rho);
    const double log_1mrho = log_inv_logit(-theta_rho);

    const double k = norm_quantile(p);
    const double sr = std::sqrt(rho);
    const double s1 = std::sqrt(1.0 - rho);

    LogPosteriorTerms lp;
    double dk = 0.0;    // d/dk, k = Phi^{-1}(p)
    double drho = 0.0;  // d/drho at fixed k and latents

    // Centered: u_t ~ N(m, s^2) with m = k / s1 and s = sr / s1.
    const bool centered = options_.parameterization == Parameterization::centered;
    const double m = k / s1;
    const double s = sr / s1;
    double dm = 0.0;
    double ds = 0.0;

    for (std::size_t t = 0; t < T; ++t) {
        const double x = q[t + 2];
        const double u = centered ? x : (k - sr * x) / s1;

        double g = 0.0;  // d loglik_t / du
        if (options_.include_likelihood) {
            const auto n = static_cast<double>(series_.periods[t].n_credits);
            const auto d = static_cast<double>(series_.periods[t].n_defaults);
            lp.likelihood += log_choose_[t];
            if (d > 0) {
                lp.likelihood += d * log_norm_cdf(u);
                g += d * inverse_mills(u);
            }
            if (n - d > 0) {
                lp.likelihood += (n - d) * log_norm_cdf(-u);
                g -= (n - d) * inverse_mills(-u);
            }
        }

        if (centered) {
            const double r = (x - m) / s;
            lp.latent_prior += -0.5 * r * r - std::log(s) - kLogSqrt2Pi;
            if (want_grad) grad[t + 2] = g - r / s;
            dm += r / s;
            ds += (r * r - 1.0) / s;
        } else {
            lp.latent_prior += -0.5 * x * x - kLogSqrt2Pi;
            if (want_grad) grad[t + 2] = -g * sr / s1 - x;
            dk += g / s1;
            drho += g * (-x / (2.0 * sr * s1) + u / (2.0 * (1.0 - rho)));
        }
    }
    if (centered) {
        dk += dm / s1;
        drho += dm * k / (2.0 * (1.0 - rho) * s1) + ds / (2.0 * s * (1.0 - rho) * (1.0 - rho));
    }

    // p | rho ~ BetaP(mu_p, a rho)
    const double alpha = prior_.mu_p * prior_.a * rho;
    const double beta = (1.0 - prior_.mu_p) * prior_.a * rho;
    lp.prior_p = (alpha - 1.0) * log_p + (beta - 1.0) * log_1mp - log_beta_function(alpha, beta);
    drho += prior_.a * (prior_.mu_p * log_p + (1.0 - prior_.mu_p) * log_1mp - prior_.mu_p * digamma(alpha) -
                        (1.0 - prior_.mu_p) * digamma(beta) + digamma(prior_.a * rho));

    // rho ~ BetaP(mu_rho, phi_rho)
    const double alpha_r = prior_.mu_rho * prior_.phi_rho;
    const double beta_r = (1.0 - prior_.mu_rho) * prior_.phi_rho;
    lp.prior_rho = (alpha_r - 1.0) * log_rho + (beta_r - 1.0) * log_1mrho - log_beta_function(alpha_r, beta_r);

    lp.jacobian = log_p + log_1mp + log_rho + log_1mrho;

    if (terms) *terms = lp;
    const double total = lp.total();
    if (!std::isfinite(total)) return reject();

    if (want_grad) {
        // dp/dtheta = p(1-p); dk/dp = 1/phi(k).
        const double dk_dtheta = std::exp(log_p + log_1mp - log_norm_pdf(k));
        grad[0] = dk * dk_dtheta + (alpha - 1.0) * (1.0 - p) - (beta - 1.0) * p + (1.0 - 2.0 * p);
        const double rho_jac = rho * (1.0 - rho);
        grad[1] = drho * rho_jac + (alpha_r - 1.0) * (1.0 - rho) - (beta_r - 1.0) * rho + (1.0 - 2.0 * rho);
        if (!std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); })) return reject();
    }
    return total;
}

std::vector<std::string> VasicekPosterior::output_names() const {
    std::vector<std::string> names{"p", "rho"};
    for (std::size_t t = 1; t <= series_.size(); ++t) names.push_back("pi[" + std::to_string(t) + "]");
    return names;
}

void VasicekPosterior::constrain(std::span<const double> q, std::span<double> out) const {
    const std::size_t T = series_.size();
    if (q.size() != T + 2 || out.size() != T + 2) throw DomainError("constrain: dimension mismatch");
    const double p = clamp_open(inv_logit(q[0]));
    const double rho = clamp_open(inv_logit(q[1]));
    out[0] = p;
    out[1] = rho;
    const double k = norm_quantile(p);
    const double sr = std::sqrt(rho);
    const double s1 = std::sqrt(1.0 - rho);
    const bool centered = options_.parameterization == Parameterization::centered;
    for (std::size_t t = 0; t < T; ++t) {
        const double x = q[t + 2];
        const double u = centered ? x : (k - sr * x) / s1;
        out[t + 2] = clamp_open(norm_cdf(u));
    }
}

std::vector<double> VasicekPosterior::initial_point(RngStream& rng) const {
    const std::size_t T = series_.size();
    constexpr double lo = 1e-12;
    constexpr double hi = 1.0 - 1e-12;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double rho = std::clamp(rng.beta_proportion(prior_.mu_rho, prior_.phi_rho), lo, hi);
        const double p = std::clamp(rng.beta_proportion(prior_.mu_p, prior_.a * rho), lo, hi);
        std::vector<double> q(T + 2);
        q[0] = logit(p);
        q[1] = logit(rho);
        const double k = norm_quantile(p);
        for (std::size_t t = 0; t < T; ++t) {
            const double z = rng.normal();
            q[t + 2] = options_.parameterization == Parameterization::centered
                           ? (k - std::sqrt(rho) * z) / std::sqrt(1.0 - rho)
                           : z;
        }
        for (double& x : q) x += 4.0 * rng.uniform() - 2.0;
        if (std::isfinite(log_density(q))) return q;
    }
    throw NumericalError("no finite initial point after 100 prior draws");
}

double log_posterior(const UnconstrainedState& state, const DefaultSeries& series, const PriorConfig& prior,
                     Parameterization parameterization) {
    if (state.zs.size() != series.size()) throw DomainError("state dimension does not match series length");
    VasicekPosterior model(series, prior, {parameterization, true});
    const auto q = state.flatten();
    std::vector<double> grad(q.size());
    return model.log_density_gradient(q, grad);
}

std::vector<double> grad_log_posterior(const UnconstrainedState& state, const DefaultSeries& series,
                                       const PriorConfig& prior, Parameterization parameterization) {
    if (state.zs.size() != series.size()) throw DomainError("state dimension does not match series length");
    VasicekPosterior model(series, prior, {parameterization, true});
    const auto q = state.flatten();
    std::vector<double> grad(q.size());
    model.log_density_gradient(q, grad);
    return grad;
}

}  // namespace vcm
