#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/nuts.hpp"
#include "vcm/posterior.hpp"
#include "vcm/series.hpp"

namespace vcm {

struct SamplerConfig {
    int chains = 4;
    int warmup = 1000;
    int draws = 1000;
    double target_accept = 0.8;
    int max_depth = 10;
    std::uint64_t seed = 1;
    /// 0 = hardware concurrency. Never changes the output.
    unsigned threads = 0;
    Parameterization parameterization = Parameterization::automatic;
    /// Off: sample the prior only.
    bool include_likelihood = true;

    void validate() const;
    NutsSettings nuts() const;
};

struct DrawsMeta {
    int warmup = 0;
    int max_depth = 10;
    std::uint64_t seed = 0;
    PriorConfig prior;
    Parameterization parameterization = Parameterization::centered;
    bool include_likelihood = true;
    std::string label;
};

/// Post-warmup draws of (p, rho, pi_1..T) from C chains of S draws each.
struct PosteriorDraws {
    std::vector<std::string> names;
    std::size_t chains = 0;
    std::size_t draws_per_chain = 0;
    std::vector<double> values;       // [chain][iter][param]
    std::vector<SamplerStats> stats;  // [chain][iter]
    std::vector<double> step_sizes;   // adapted step size per chain
    DrawsMeta meta;

    /// More than 1% of post-warmup transitions diverged.
    bool divergence_warning = false;

    std::size_t num_params() const noexcept { return names.size(); }
    std::size_t total_draws() const noexcept { return chains * draws_per_chain; }
    double at(std::size_t chain, std::size_t iter, std::size_t param) const {
        return values[(chain * draws_per_chain + iter) * names.size() + param];
    }
    /// Throws DomainError for an unknown name.
    std::size_t index_of(std::string_view name) const;
    /// All draws of one parameter, chain-major.
    std::vector<double> column(std::size_t param) const;
    std::vector<double> column(std::string_view name) const { return column(index_of(name)); }
    /// Per-chain draws of one parameter.
    std::vector<std::vector<double>> chain_columns(std::size_t param) const;
    int divergences() const;
    int max_treedepth_hits() const;
};

/// Multinomial NUTS on the joint posterior; chain c draws from RngStream(seed, c).
PosteriorDraws nuts_sample(const DefaultSeries& series, const PriorConfig& prior, const SamplerConfig& config);

/// Runs `config.chains` chains on any model and stores the unconstrained
/// draws as-is under `names`.
PosteriorDraws sample_model(const LogDensityModel& model, std::vector<std::string> names,
                            const SamplerConfig& config);

// ---------------------------------------------------------------------------
// Diagnostics

/// Returned for R-hat / ESS when undefined (constant chains).
inline constexpr double kUndefinedDiagnostic = std::numeric_limits<double>::quiet_NaN();

/// Split-chain R-hat over rank-normalised draws (max of bulk and folded).
/// NaN when every chain is constant.
double split_rhat(const std::vector<std::vector<double>>& chains);
/// Rank-normalised bulk ESS with Geyer's initial monotone sequence; capped at C*S.
double ess_bulk(const std::vector<std::vector<double>>& chains);
/// Plain (non rank-normalised) split ESS.
double ess_basic(const std::vector<std::vector<double>>& chains);

struct Diagnostics {
    std::vector<std::string> names;
    std::vector<double> rhat;
    std::vector<double> ess_bulk;
    int divergences = 0;
    int max_treedepth_hits = 0;
    /// Names of parameters whose R-hat is undefined.
    std::vector<std::string> undefined;

    double rhat_of(std::string_view name) const;
    double ess_of(std::string_view name) const;
};

/// Requires at least 2 chains of at least 4 draws.
Diagnostics diagnostics(const PosteriorDraws& draws);

/// Mean, sd and equal-tailed quantiles of one parameter's draws.
struct ParamSummary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    double q975 = 0.0;
};

ParamSummary summarize(std::span<const double> values);

enum class EventParam { p, rho };

/// Share of index-matched draw pairs with a > b.
double posterior_event_prob(const PosteriorDraws& draws_a, const PosteriorDraws& draws_b, EventParam which);

}  // namespace vcm
