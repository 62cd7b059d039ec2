#pragma once

#include <cstdint>
#include <span>

namespace vcm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

// Standard normal ---------------------------------------------------------

double norm_pdf(double x);
double log_norm_pdf(double x);
/// Phi(x), via erfc; absolute error at the level of double rounding.
double norm_cdf(double x);
/// log Phi(x), accurate deep into the lower tail (asymptotic series below -30).
double log_norm_cdf(double x);
/// phi(x) / Phi(x), the inverse Mills ratio, stable for all finite x.
double inverse_mills(double x);
/// Phi^{-1}(q) for 0 < q < 1. Rational approximation plus one Halley step.
/// Throws DomainError outside the open interval.
double norm_quantile(double q);

// Bivariate normal --------------------------------------------------------

/// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
/// Drezner-Wesolowsky reduction with Genz's Gauss-Legendre rules.
double binorm_cdf(double x, double y, double rho);
/// binorm_cdf(x, y, rho) - Phi(x) Phi(y), computed without cancellation for
/// |rho| < 0.925.
double binorm_excess(double x, double y, double rho);

// Gamma family ------------------------------------------------------------

/// log Gamma(x) for x > 0.
double log_gamma(double x);
/// psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);
double log_beta_function(double a, double b);
/// log C(n, k).
double log_binomial_coefficient(std::int64_t n, std::int64_t k);

/// Log-density of BetaP(mu, phi) = Beta(mu*phi, (1-mu)*phi) at x.
/// Returns kLogZero at x = 0 or x = 1.
double betap_logpdf(double x, double mu, double phi);

// Utilities ---------------------------------------------------------------

double log_sum_exp(std::span<const double> values);
double log_sum_exp(double a, double b);
double logit(double x);
double inv_logit(double x);

}  // namespace vcm
