#include "vcm/vasicek.hpp"

#include <cmath>
#include <string>

#include "vcm/error.hpp"
#include "vcm/special.hpp"

namespace vcm {

VasicekParams::VasicekParams(double p, double rho) : p_(p), rho_(rho), threshold_(0.0) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("VasicekParams: p must lie in (0, 1), got " + std::to_string(p));
    if (!(rho > 0.0 && rho < 1.0)) {
        throw DomainError("VasicekParams: rho must lie in (0, 1), got " + std::to_string(rho));
    }
    threshold_ = norm_quantile(p);
}

double pi_conditional(double z, const VasicekParams& params) {
    const double rho = params.rho();
    return norm_cdf((params.threshold() - std::sqrt(rho) * z) / std::sqrt(1.0 - rho));
}

double vasicek_logpdf(double x, const VasicekParams& params) {
    if (!(x > 0.0 && x < 1.0)) return kLogZero;
    const double rho = params.rho();
    const double u = norm_quantile(x);
    const double r = std::sqrt(1.0 - rho) * u - params.threshold();
    return 0.5 * (std::log1p(-rho) - std::log(rho)) - r * r / (2.0 * rho) + 0.5 * u * u;
}

double vasicek_cdf(double x, const VasicekParams& params) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("vasicek_cdf: x must lie in (0, 1), got " + std::to_string(x));
    const double rho = params.rho();
    return norm_cdf((std::sqrt(1.0 - rho) * norm_quantile(x) - params.threshold()) / std::sqrt(rho));
}

double vasicek_quantile(double q, const VasicekParams& params) {
    if (!(q > 0.0 && q < 1.0)) {
        throw DomainError("vasicek_quantile: q must lie in (0, 1), got " + std::to_string(q));
    }
    const double rho = params.rho();
    return norm_cdf((std::sqrt(rho) * norm_quantile(q) + params.threshold()) / std::sqrt(1.0 - rho));
}

VasicekMoments vasicek_moments(const VasicekParams& params) {
    const double k = params.threshold();
    return {params.p(), binorm_excess(k, k, params.rho())};
}

double sample_pi(const VasicekParams& params, RngStream& rng) {
    return pi_conditional(rng.normal(), params);
}

}  // namespace vcm
