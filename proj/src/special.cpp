#include "vcm/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "vcm/error.hpp"

namespace vcm {

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double log_norm_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_norm_cdf(double x) {
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
    if (x > -30.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
    // Phi(x) ~ phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
    const double x2inv = 1.0 / (x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -(2.0 * k - 1.0) * x2inv;
        sum += term;
    }
    return log_norm_pdf(x) - std::log(-x) + std::log(sum);
}

double inverse_mills(double x) {
    if (x > 5.0) return norm_pdf(x) / norm_cdf(x);
    return std::exp(log_norm_pdf(x) - log_norm_cdf(x));
}

namespace {

// Acklam's rational approximation for the lower half, refined by Halley.
double norm_quantile_lower(double q) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    double x;
    if (q < 0.02425) {
        const double t = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    } else {
        const double t = q - 0.5;
        const double r = t * t;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    // Halley step on Phi(x) - q. The residual over phi(x) is formed in log
    // space so it stays finite for subnormal q.
    const double rel = std::expm1(log_norm_cdf(x) - std::log(q));
    const double u = rel * std::exp(std::log(q) - log_norm_pdf(x));
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

double norm_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw DomainError("norm_quantile: q must lie in (0, 1), got " + std::to_string(q));
    }
    if (q == 0.5) return 0.0;
    if (q > 0.5) return -norm_quantile_lower(1.0 - q);
    return norm_quantile_lower(q);
}

// ---------------------------------------------------------------------------
// Bivariate normal (Genz, "Numerical computation of rectangular bivariate and
// trivariate normal and t probabilities", 2004).

namespace {

struct LegendreHalfRule {
    int size;
    const double* x;
    const double* w;
};

constexpr double kX6[] = {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970};
constexpr double kW6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr double kX12[] = {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                           -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
constexpr double kW12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                           0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
constexpr double kX20[] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                           -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                           -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                           -0.07652652113349733};
constexpr double kW20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                           0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                           0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                           0.1527533871307259};

LegendreHalfRule legendre_for(double abs_r) {
    if (abs_r < 0.3) return {3, kX6, kW6};
    if (abs_r < 0.75) return {6, kX12, kW12};
    return {10, kX20, kW20};
}

// Sum term of the |r| < 0.925 branch: P(X > h, Y > k) - Phi(-h) Phi(-k).
double bvn_small_r_excess(double h, double k, double r) {
    const LegendreHalfRule rule = legendre_for(std::abs(r));
    const double hk = h * k;
    const double hs = 0.5 * (h * h + k * k);
    const double asr = std::asin(r);
    double sum = 0.0;
    for (int i = 0; i < rule.size; ++i) {
        for (double sign : {1.0, -1.0}) {
            const double sn = std::sin(asr * (sign * rule.x[i] + 1.0) * 0.5);
            sum += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
    }
    return sum * asr / (4.0 * kPi);
}

// Upper orthant probability P(X > dh, Y > dk).
double bvnu(double dh, double dk, double r) {
    if (std::abs(r) < 0.925) {
        return bvn_small_r_excess(dh, dk, r) + norm_cdf(-dh) * norm_cdf(-dk);
    }
    const LegendreHalfRule rule = legendre_for(std::abs(r));
    const double twopi = 2.0 * kPi;
    double h = dh;
    double k = dk;
    double hk = h * k;
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    double bvn = 0.0;
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(twopi) * norm_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (int i = 0; i < rule.size; ++i) {
            for (double sign : {-1.0, 1.0}) {
                double xs = a * (sign * rule.x[i] + 1.0);
                xs *= xs;
                const double rs = std::sqrt(1.0 - xs);
                bvn += a * rule.w[i] *
                       (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                        std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / twopi;
    }
    if (r > 0.0) {
        bvn += norm_cdf(-std::max(h, k));
    } else {
        bvn = -bvn;
        if (k > h) {
            if (h < 0.0) {
                bvn += norm_cdf(k) - norm_cdf(h);
            } else {
                bvn += norm_cdf(-h) - norm_cdf(-k);
            }
        }
    }
    return bvn;
}

void check_rho(double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw DomainError("binorm_cdf: |rho| must be < 1, got " + std::to_string(rho));
    }
}

}  // namespace

double binorm_cdf(double x, double y, double rho) {
    check_rho(rho);
    return std::clamp(bvnu(-x, -y, rho), 0.0, 1.0);
}

double binorm_excess(double x, double y, double rho) {
    check_rho(rho);
    if (std::abs(rho) < 0.925) return bvn_small_r_excess(-x, -y, rho);
    return bvnu(-x, -y, rho) - norm_cdf(x) * norm_cdf(y);
}

// ---------------------------------------------------------------------------
// Gamma family

namespace {

// Lanczos g = 7, n = 9 (Godfrey coefficients).
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

double log_gamma_lanczos(double x) {
    // x >= 0.5 here.
    const double xm1 = x - 1.0;
    double sum = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (xm1 + static_cast<double>(i));
    const double t = xm1 + kLanczosG + 0.5;
    return kLogSqrt2Pi + (xm1 + 0.5) * std::log(t) - t + std::log(sum);
}

double log_gamma_stirling(double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 / 12.0 -
               inv2 * (1.0 / 360.0 -
                       inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    return (x - 0.5) * std::log(x) - x + kLogSqrt2Pi + series;
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("log_gamma: x must be positive, got " + std::to_string(x));
    if (x == 1.0 || x == 2.0) return 0.0;
    if (x >= 15.0) return log_gamma_stirling(x);
    if (x < 0.5) {
        // Gamma(x) = Gamma(x + 1) / x keeps the Lanczos sum away from its pole.
        return log_gamma_lanczos(x + 1.0) - std::log(x);
    }
    return log_gamma_lanczos(x);
}

double digamma(double x) {
    if (!(x > 0.0)) throw DomainError("digamma: x must be positive, got " + std::to_string(x));
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Bernoulli tail: B2/2, B4/4, ... B12/12
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return shift + std::log(x) - 0.5 * inv - series;
}

double log_beta_function(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

double log_binomial_coefficient(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return kLogZero;
    if (k == 0 || k == n) return 0.0;
    const auto nd = static_cast<double>(n);
    const auto kd = static_cast<double>(k);
    return log_gamma(nd + 1.0) - log_gamma(kd + 1.0) - log_gamma(nd - kd + 1.0);
}

double betap_logpdf(double x, double mu, double phi) {
    if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0)) {
        throw DomainError("betap_logpdf: need 0 < mu < 1 and phi > 0");
    }
    if (!(x > 0.0 && x < 1.0)) return kLogZero;
    const double alpha = mu * phi;
    const double beta = (1.0 - mu) * phi;
    return (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
           log_beta_function(alpha, beta);
}

// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> values) {
    double m = kLogZero;
    for (double v : values) m = std::max(m, v);
    if (m == kLogZero) return kLogZero;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

double log_sum_exp(double a, double b) {
    if (a == kLogZero) return b;
    if (b == kLogZero) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

double logit(double x) { return std::log(x) - std::log1p(-x); }

double inv_logit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace vcm
