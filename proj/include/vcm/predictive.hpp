#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vcm/bayes.hpp"
#include "vcm/classical.hpp"
#include "vcm/rng.hpp"
#include "vcm/series.hpp"

namespace vcm {

/// Replicated default counts, paired with the observed exposures.
struct PredictiveDraws {
    std::vector<std::int64_t> exposures;  // N_t
    std::size_t replicates = 0;
    std::vector<std::int64_t> defaults;   // [replicate][period]
    std::vector<std::size_t> source;      // flat posterior draw index per replicate

    std::size_t periods() const noexcept { return exposures.size(); }
    std::int64_t at(std::size_t rep, std::size_t t) const { return defaults[rep * periods() + t]; }
    std::vector<double> rates(std::size_t rep) const;
};

/// Whether replicates re-draw the factor per period or reuse the fitted pi_t.
enum class LatentMode { redraw, fitted };

/// One replicate per selected posterior draw; draws are picked at evenly
/// spaced flat indices. Requires s_rep <= total draws.
PredictiveDraws posterior_predictive(const PosteriorDraws& draws, const DefaultSeries& series, std::size_t s_rep,
                                     RngStream rng, LatentMode mode = LatentMode::redraw);

enum class PpcStatistic { median, iqr };

std::string_view to_string(PpcStatistic statistic);
PpcStatistic parse_statistic(std::string_view name);
/// Median, or Q3 - Q1 (type 7), of a set of rates.
double ppc_statistic(std::span<const double> rates, PpcStatistic statistic);
/// Share of replicates whose statistic is >= the observed one. Needs >= 100 replicates.
double ppc_pvalue(const PredictiveDraws& pred, const DefaultSeries& series, PpcStatistic statistic);

/// Gaussian kernel density on an evenly spaced grid.
struct DensityGrid {
    std::vector<double> x;
    std::vector<double> density;
    double bandwidth = 0.0;
};

/// Silverman's rule: 0.9 min(sd, IQR/1.34) n^(-1/5).
double silverman_bandwidth(std::span<const double> values);
/// Grid spans [min - 3h, max + 3h] unless `range` is given.
DensityGrid kernel_density(std::span<const double> values, std::size_t points = 512,
                           std::optional<Interval> range = std::nullopt);

struct ForecastResult {
    std::int64_t horizon_exposure = 0;
    std::vector<std::int64_t> draws;
    Interval interval50;
    Interval interval90;
    double median_rate = 0.0;
};

/// One predicted default count per posterior draw for a period with
/// `next_exposure` credits; intervals are equal-tailed quantiles of the rate.
ForecastResult forecast_one_step(const PosteriorDraws& draws, std::int64_t next_exposure, RngStream rng);

}  // namespace vcm
