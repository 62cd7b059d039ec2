#pragma once

#include <span>

#include "vcm/classical.hpp"
#include "vcm/rng.hpp"

namespace vcm {

struct BootstrapSettings {
    int n_rep = 10000;
    double level = 0.95;
    unsigned threads = 0;
    MleSettings mle{};
};

struct BcaResult {
    Interval interval;
    double z0 = 0.0;
    double acceleration = 0.0;
    /// True when the bias constant was infinite and percentile limits were used.
    bool percentile_fallback = false;
};

/// Bias-corrected and accelerated interval from bootstrap replicates and
/// leave-one-out jackknife estimates.
BcaResult bca_interval(double estimate, std::span<const double> replicates, std::span<const double> jackknife,
                       double level);

/// Type-7 (linear interpolation) sample quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double q);

/// Period-resampling bootstrap around a classical estimator. The point
/// estimate is bias-corrected (2 theta - mean theta*), the intervals are BCa.
/// Replicate i draws from rng.split(i), so output is independent of
/// `settings.threads`.
EstimateReport bootstrap_estimate(const DefaultSeries& series, Method base, const BootstrapSettings& settings,
                                  const RngStream& rng);

}  // namespace vcm
