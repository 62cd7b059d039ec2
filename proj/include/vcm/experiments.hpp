#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vcm/bayes.hpp"
#include "vcm/bootstrap.hpp"
#include "vcm/predictive.hpp"

namespace vcm {

/// Posterior summary of one (phi_rho, a) prior cell.
struct PriorSweepCell {
    double phi_rho = 0.0;
    double a = 0.0;
    bool ok = false;
    std::string error;
    ParamSummary p;
    ParamSummary rho;
    double rhat_p = 0.0;
    double rhat_rho = 0.0;
    double ess_p = 0.0;
    double ess_rho = 0.0;
    int divergences = 0;
    DensityGrid density_p;
    DensityGrid density_rho;
};

/// Refits under every (phi, a) pair with mu_p and mu_rho taken from `base`.
/// Every cell uses the same sampler seed. Failed cells are recorded and the
/// sweep continues. Cells are ordered phi-major.
std::vector<PriorSweepCell> sweep_priors(const DefaultSeries& series, const std::vector<double>& phi_grid,
                                         const std::vector<double>& a_grid, const SamplerConfig& sampler,
                                         const PriorConfig& base = {});

/// Posterior point/interval summary as an EstimateReport (method BAYES):
/// posterior means and 95% equal-tailed credible intervals.
EstimateReport bayes_report(const PosteriorDraws& draws);

enum class CumulativeMode { bayes_refit, bootstrap_amle };

std::string_view to_string(CumulativeMode mode);
CumulativeMode parse_cumulative_mode(std::string_view name);

struct CumulativeSettings {
    CumulativeMode mode = CumulativeMode::bootstrap_amle;
    std::size_t t_start = 3;
    std::size_t t_end = 0;  // 0 = series length
    SamplerConfig sampler{};
    PriorConfig prior{};
    BootstrapSettings bootstrap{1000, 0.95, 0, {}};
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct CumulativeStep {
    std::size_t t = 0;
    bool ok = false;
    std::string error;
    EstimateReport report;
    /// Bootstrap median (bootstrap_amle) or posterior median (bayes_refit).
    double median_p = 0.0;
    double median_rho = 0.0;
    /// bayes_refit with t < series length: forecast of period t+1 and its realised rate.
    std::optional<ForecastResult> forecast;
    std::optional<double> realized_rate;
};

/// Refits on every prefix length t in [t_start, t_end]. Per-t failures are
/// recorded and the trace continues.
std::vector<CumulativeStep> cumulative_study(const DefaultSeries& series, const CumulativeSettings& settings);

}  // namespace vcm
