#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcm/bayes.hpp"
#include "vcm/classical.hpp"
#include "vcm/experiments.hpp"
#include "vcm/predictive.hpp"
#include "vcm/series.hpp"

namespace vcm {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Reads `period,n_credits,n_defaults` or `period,n_credits,default_rate`.
/// Rates become round(rate * N) defaults. Throws ParseError naming the
/// 1-based row (header = row 1) and column.
DefaultSeries read_series_csv(std::istream& in, std::string label = {});
DefaultSeries read_series_file(const std::filesystem::path& path);
/// Writes `period,n_credits,n_defaults` with periods numbered from 1.
void write_series_csv(std::ostream& out, const DefaultSeries& series);
void write_series_file(const std::filesystem::path& path, const DefaultSeries& series);

/// Long format: chain,iter,name,value (1-based chain and iter).
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);
/// chain,iter,accept_stat,step_size,tree_depth,n_leapfrog,divergent,energy
void write_sampler_stats_csv(std::ostream& out, const PosteriorDraws& draws);
/// Inverse of write_draws_csv; sampler stats are not restored.
PosteriorDraws read_draws_csv(std::istream& in);
PosteriorDraws read_draws_file(const std::filesystem::path& path);

Json to_json(const Interval& interval);
Json to_json(const EstimateReport& report, bool include_replicates = false);
Json to_json(const ParamSummary& summary);
Json to_json(const PriorConfig& prior);
Json to_json(const SamplerConfig& sampler);
Json to_json(const ForecastResult& forecast);

/// Means, quantiles, R-hat, ESS and divergence counts for every parameter.
Json draws_summary_json(const PosteriorDraws& draws);

/// Two-column CSV `x,density`.
void write_density_csv(std::ostream& out, const DensityGrid& grid);

/// Sample autocorrelation of x at lags 0..max_lag.
std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t max_lag);

/// Throws IoError when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vcm
