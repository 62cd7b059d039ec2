#include "vcm/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcm/error.hpp"
#include "vcm/parallel.hpp"
#include "vcm/special.hpp"

namespace vcm {

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("sorted_quantile: empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BcaResult bca_interval(double estimate, std::span<const double> replicates, std::span<const double> jackknife,
                       double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bca_interval: level must lie in (0, 1)");
    if (replicates.empty()) throw ValidationError("bca_interval: no replicates");
    std::vector<double> sorted(replicates.begin(), replicates.end());
    std::sort(sorted.begin(), sorted.end());

    const auto below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), estimate) - sorted.begin());
    const auto ties = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), estimate) -
                                          std::lower_bound(sorted.begin(), sorted.end(), estimate));
    const double share = (below + 0.5 * ties) / static_cast<double>(sorted.size());
    const double alpha = 0.5 * (1.0 - level);

    BcaResult result;
    if (share <= 0.0 || share >= 1.0) {
        result.percentile_fallback = true;
        result.interval = {sorted_quantile(sorted, alpha), sorted_quantile(sorted, 1.0 - alpha)};
        return result;
    }
    result.z0 = norm_quantile(share);

    if (jackknife.size() >= 2) {
        const double mean = std::accumulate(jackknife.begin(), jackknife.end(), 0.0) /
                            static_cast<double>(jackknife.size());
        double num = 0.0;
        double den = 0.0;
        for (double v : jackknife) {
            const double d = mean - v;
            num += d * d * d;
            den += d * d;
        }
        result.acceleration = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;
    }

    auto adjusted = [&](double q) {
        const double zq = norm_quantile(q);
        const double s = result.z0 + zq;
        const double denom = 1.0 - result.acceleration * s;
        if (denom <= 0.0) return q < 0.5 ? 0.0 : 1.0;
        return norm_cdf(result.z0 + s / denom);
    };
    double lo = sorted_quantile(sorted, adjusted(alpha));
    double hi = sorted_quantile(sorted, adjusted(1.0 - alpha));
    if (lo > hi) std::swap(lo, hi);
    result.interval = {lo, hi};
    return result;
}

EstimateReport bootstrap_estimate(const DefaultSeries& series, Method base, const BootstrapSettings& settings,
                                  const RngStream& rng) {
    validate(series, kMinEstimationLength);
    if (settings.n_rep < 100) throw ConfigError("bootstrap_estimate: n_rep must be >= 100");
    if (!(settings.level > 0.0 && settings.level < 1.0)) throw ConfigError("bootstrap_estimate: level must lie in (0, 1)");

    const EstimateReport point = estimate(series, base, settings.mle);
    MleSettings replicate_mle = settings.mle;
    if (base == Method::MLE && !replicate_mle.warm_start) replicate_mle.warm_start = VasicekParams(point.p_hat, point.rho_hat);
    const std::size_t t = series.size();
    const auto reps = static_cast<std::size_t>(settings.n_rep);

    std::vector<double> rep_p(reps);
    std::vector<double> rep_rho(reps);
    std::vector<char> failed(reps, 0);
    parallel_for(reps, settings.threads, [&](std::size_t i) {
        RngStream stream = rng.split(i);
        DefaultSeries resample;
        resample.periods.reserve(t);
        for (std::size_t j = 0; j < t; ++j) resample.periods.push_back(series.periods[stream.below(t)]);
        const EstimateReport r = detail::estimate_unchecked(resample, base, replicate_mle);
        rep_p[i] = r.p_hat;
        rep_rho[i] = r.rho_hat;
        failed[i] = r.convergence_flag ? 0 : 1;
    });

    std::vector<double> jack_p(t);
    std::vector<double> jack_rho(t);
    parallel_for(t, settings.threads, [&](std::size_t i) {
        DefaultSeries loo;
        loo.periods.reserve(t - 1);
        for (std::size_t j = 0; j < t; ++j) {
            if (j != i) loo.periods.push_back(series.periods[j]);
        }
        const EstimateReport r = detail::estimate_unchecked(loo, base, replicate_mle);
        jack_p[i] = r.p_hat;
        jack_rho[i] = r.rho_hat;
    });

    EstimateReport report;
    report.method = base;
    report.interval_level = settings.level;
    report.n_bootstrap = reps;
    report.log_likelihood = point.log_likelihood;
    report.flags = point.flags;
    report.convergence_flag = point.convergence_flag;

    const ParameterBounds& b = settings.mle.bounds;
    auto corrected = [&](double estimate_value, const std::vector<double>& reps_v, double lo, double hi,
                         const char* name) {
        const double mean = std::accumulate(reps_v.begin(), reps_v.end(), 0.0) / static_cast<double>(reps_v.size());
        const double value = 2.0 * estimate_value - mean;
        if (value < lo || value > hi) {
            report.flags.push_back(std::string("bias_corrected_") + name + "_clamped");
            return std::clamp(value, lo, hi);
        }
        return value;
    };
    report.p_hat = corrected(point.p_hat, rep_p, b.p_lo, b.p_hi, "p");
    report.rho_hat = corrected(point.rho_hat, rep_rho, b.rho_lo, b.rho_hi, "rho");

    const BcaResult bca_p = bca_interval(point.p_hat, rep_p, jack_p, settings.level);
    const BcaResult bca_rho = bca_interval(point.rho_hat, rep_rho, jack_rho, settings.level);
    report.interval_p = bca_p.interval;
    report.interval_rho = bca_rho.interval;
    if (bca_p.percentile_fallback || bca_rho.percentile_fallback) report.flags.emplace_back("bca_percentile_fallback");

    const auto n_failed = static_cast<double>(std::count(failed.begin(), failed.end(), 1));
    report.failure_fraction = n_failed / static_cast<double>(reps);
    if (report.failure_fraction > 0.2) {
        report.flags.emplace_back("replicate_failures");
        report.convergence_flag = false;
    }
    report.replicates_p = std::move(rep_p);
    report.replicates_rho = std::move(rep_rho);
    return report;
}

}  // namespace vcm
