#pragma once

#include "vcm/rng.hpp"

namespace vcm {

/// Long-run default probability p and asset correlation rho, both in (0, 1).
class VasicekParams {
public:
    /// Throws DomainError unless 0 < p < 1 and 0 < rho < 1.
    VasicekParams(double p, double rho);

    double p() const noexcept { return p_; }
    double rho() const noexcept { return rho_; }
    /// Default threshold Phi^{-1}(p).
    double threshold() const noexcept { return threshold_; }

    friend bool operator==(const VasicekParams&, const VasicekParams&) = default;

private:
    double p_;
    double rho_;
    double threshold_;
};

/// Realised value of the systematic factor Z in a period.
struct FactorDraw {
    double z = 0.0;
};

/// pi(z) = Phi((Phi^{-1}(p) - sqrt(rho) z) / sqrt(1 - rho)). High z is a good state.
double pi_conditional(double z, const VasicekParams& params);
inline double pi_conditional(FactorDraw factor, const VasicekParams& params) {
    return pi_conditional(factor.z, params);
}

/// Log-density of Vas(p, rho) at x; kLogZero at the boundary.
double vasicek_logpdf(double x, const VasicekParams& params);
/// Throws DomainError unless 0 < x < 1.
double vasicek_cdf(double x, const VasicekParams& params);
/// Throws DomainError unless 0 < q < 1.
double vasicek_quantile(double q, const VasicekParams& params);

struct VasicekMoments {
    double mean;
    double variance;
};

/// E[pi] = p and Var(pi) = Phi2(k, k; rho) - p^2 with k = Phi^{-1}(p).
VasicekMoments vasicek_moments(const VasicekParams& params);

/// One draw of pi(Z) with Z standard normal.
double sample_pi(const VasicekParams& params, RngStream& rng);

}  // namespace vcm
