#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/rng.hpp"
#include "vcm/series.hpp"

namespace vcm {

/// Hyperparameters of f(p, rho) = BetaP(p; mu_p, a rho) BetaP(rho; mu_rho, phi_rho).
struct PriorConfig {
    double mu_p = 0.2;
    double mu_rho = 0.5;
    double phi_rho = 5.0;
    double a = 10.0;

    /// Lower prior mean for p, used for rated corporate portfolios.
    static PriorConfig corporate() { return {0.1, 0.5, 5.0, 10.0}; }
    /// Throws ConfigError unless means lie in (0,1) and scales are positive.
    void validate() const;
};

/// How the per-period default probabilities pi_t enter the unconstrained space.
enum class Parameterization {
    /// z_t ~ N(0,1), pi_t = pi(z_t; p, rho).
    noncentered,
    /// u_t = Phi^{-1}(pi_t) ~ N(Phi^{-1}(p)/sqrt(1-rho), rho/(1-rho)); the
    /// probit image of pi_t ~ Vas(p, rho).
    centered,
    /// centered when the likelihood is on, noncentered for prior-only runs.
    automatic,
};

/// Resolves `automatic`; other values pass through.
Parameterization resolve_parameterization(Parameterization parameterization, bool include_likelihood);

std::string_view to_string(Parameterization parameterization);
Parameterization parse_parameterization(std::string_view name);

/// Point in the sampler's space: logit p, logit rho, then one latent per period.
struct UnconstrainedState {
    double theta_p = 0.0;
    double theta_rho = 0.0;
    std::vector<double> zs;  // one latent per period (z_t, or u_t when centered)

    std::vector<double> flatten() const;
    static UnconstrainedState unflatten(std::span<const double> q);
};

/// Generic differentiable log density for the HMC engine.
class LogDensityModel {
public:
    virtual ~LogDensityModel() = default;
    virtual std::size_t dimension() const = 0;
    /// Returns log density at q and writes its gradient. A non-finite return
    /// value marks q as outside the support.
    virtual double log_density_gradient(std::span<const double> q, std::span<double> grad) const = 0;
    double log_density(std::span<const double> q) const;
};

/// Additive pieces of the log posterior; their sum is the log density.
struct LogPosteriorTerms {
    double likelihood = 0.0;    // sum_t log Bin(D_t; N_t, pi_t)
    double latent_prior = 0.0;  // sum_t log density of the latent coordinate
    double prior_p = 0.0;       // log BetaP(p; mu_p, a rho)
    double prior_rho = 0.0;     // log BetaP(rho; mu_rho, phi_rho)
    double jacobian = 0.0;      // logit Jacobians of p and rho

    double total() const { return likelihood + latent_prior + prior_p + prior_rho + jacobian; }
};

struct PosteriorOptions {
    Parameterization parameterization = Parameterization::centered;
    /// Off: prior (and prior pushforward on pi_t) only.
    bool include_likelihood = true;
};

/// Joint posterior of (p, rho, pi_1..T) in unconstrained coordinates, with a
/// hand-derived gradient. Safe for concurrent evaluation.
class VasicekPosterior final : public LogDensityModel {
public:
    VasicekPosterior(DefaultSeries series, PriorConfig prior, PosteriorOptions options = {});

    std::size_t dimension() const override { return series_.size() + 2; }
    double log_density_gradient(std::span<const double> q, std::span<double> grad) const override;
    LogPosteriorTerms terms(std::span<const double> q) const;

    /// "p", "rho", "pi[1]", ..., "pi[T]".
    std::vector<std::string> output_names() const;
    /// Maps q to (p, rho, pi_1..T); every value strictly inside (0, 1).
    void constrain(std::span<const double> q, std::span<double> out) const;
    /// Independent prior draw, jittered by U(-2, 2) per coordinate.
    std::vector<double> initial_point(RngStream& rng) const;

    const DefaultSeries& series() const noexcept { return series_; }
    const PriorConfig& prior() const noexcept { return prior_; }
    const PosteriorOptions& options() const noexcept { return options_; }

private:
    double evaluate(std::span<const double> q, std::span<double> grad, LogPosteriorTerms* terms) const;

    DefaultSeries series_;
    PriorConfig prior_;
    PosteriorOptions options_;
    std::vector<double> log_choose_;
};

/// Log joint density at `state` under the given parameterization.
double log_posterior(const UnconstrainedState& state, const DefaultSeries& series, const PriorConfig& prior,
                     Parameterization parameterization = Parameterization::noncentered);
/// Exact gradient of log_posterior, ordered (theta_p, theta_rho, zs...).
std::vector<double> grad_log_posterior(const UnconstrainedState& state, const DefaultSeries& series,
                                       const PriorConfig& prior,
                                       Parameterization parameterization = Parameterization::noncentered);

}  // namespace vcm
