#include "vcm/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "vcm/error.hpp"
#include "vcm/parallel.hpp"

namespace vcm {

namespace {

// Stream ids for the randomness of the experiment drivers.
constexpr std::uint64_t kBootstrapStream = 0x424f4f54;
constexpr std::uint64_t kForecastStream = 0x464f5245;

}  // namespace

std::vector<PriorSweepCell> sweep_priors(const DefaultSeries& series, const std::vector<double>& phi_grid,
                                         const std::vector<double>& a_grid, const SamplerConfig& sampler,
                                         const PriorConfig& base) {
    if (phi_grid.empty() || a_grid.empty()) throw ConfigError("sweep_priors: grids must be non-empty");
    validate(series);
    std::vector<PriorSweepCell> cells(phi_grid.size() * a_grid.size());
    SamplerConfig inner = sampler;
    inner.threads = 1;
    parallel_for(cells.size(), sampler.threads, [&](std::size_t i) {
        PriorSweepCell& cell = cells[i];
        cell.phi_rho = phi_grid[i / a_grid.size()];
        cell.a = a_grid[i % a_grid.size()];
        try {
            PriorConfig prior = base;
            prior.phi_rho = cell.phi_rho;
            prior.a = cell.a;
            const PosteriorDraws draws = nuts_sample(series, prior, inner);
            const auto p = draws.column("p");
            const auto rho = draws.column("rho");
            cell.p = summarize(p);
            cell.rho = summarize(rho);
            if (draws.chains >= 2) {
                cell.rhat_p = split_rhat(draws.chain_columns(0));
                cell.rhat_rho = split_rhat(draws.chain_columns(1));
                cell.ess_p = ess_bulk(draws.chain_columns(0));
                cell.ess_rho = ess_bulk(draws.chain_columns(1));
            }
            cell.divergences = draws.divergences();
            cell.density_p = kernel_density(p);
            cell.density_rho = kernel_density(rho);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    });
    return cells;
}

EstimateReport bayes_report(const PosteriorDraws& draws) {
    EstimateReport r;
    r.method = Method::BAYES;
    const ParamSummary p = summarize(draws.column("p"));
    const ParamSummary rho = summarize(draws.column("rho"));
    r.p_hat = p.mean;
    r.rho_hat = rho.mean;
    r.interval_p = Interval{p.q025, p.q975};
    r.interval_rho = Interval{rho.q025, rho.q975};
    r.interval_level = 0.95;
    if (draws.chains >= 2 && draws.draws_per_chain >= 4) {
        const double worst = std::max(split_rhat(draws.chain_columns(0)), split_rhat(draws.chain_columns(1)));
        if (!(worst <= 1.05)) {
            r.flags.emplace_back("rhat_above_1.05");
            r.convergence_flag = false;
        }
    }
    if (draws.divergence_warning) {
        r.flags.emplace_back("divergences_above_1pct");
        r.convergence_flag = false;
    }
    return r;
}

std::string_view to_string(CumulativeMode mode) {
    return mode == CumulativeMode::bayes_refit ? "bayes_refit" : "bootstrap_amle";
}

CumulativeMode parse_cumulative_mode(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "bayes_refit" || lower == "bayes") return CumulativeMode::bayes_refit;
    if (lower == "bootstrap_amle" || lower == "bootstrap") return CumulativeMode::bootstrap_amle;
    throw ConfigError("unknown cumulative mode '" + std::string(name) + "'");
}

std::vector<CumulativeStep> cumulative_study(const DefaultSeries& series, const CumulativeSettings& settings) {
    validate(series);
    const std::size_t T = series.size();
    const std::size_t t_end = settings.t_end == 0 ? T : settings.t_end;
    if (settings.t_start < kMinEstimationLength || settings.t_start >= t_end || t_end > T) {
        throw ConfigError("cumulative_study: need 3 <= t_start < t_end <= series length");
    }
    const std::size_t steps = t_end - settings.t_start + 1;
    std::vector<CumulativeStep> out(steps);

    SamplerConfig sampler = settings.sampler;
    sampler.threads = 1;
    BootstrapSettings boot = settings.bootstrap;
    boot.threads = 1;

    parallel_for(steps, settings.threads, [&](std::size_t i) {
        CumulativeStep& step = out[i];
        step.t = settings.t_start + i;
        const DefaultSeries prefix = series.prefix(step.t);
        try {
            if (settings.mode == CumulativeMode::bootstrap_amle) {
                const RngStream rng = RngStream(settings.seed, kBootstrapStream).split(step.t);
                step.report = bootstrap_estimate(prefix, Method::AMLE, boot, rng);
                std::vector<double> rp = step.report.replicates_p;
                std::vector<double> rr = step.report.replicates_rho;
                std::sort(rp.begin(), rp.end());
                std::sort(rr.begin(), rr.end());
                step.median_p = sorted_quantile(rp, 0.5);
                step.median_rho = sorted_quantile(rr, 0.5);
            } else {
                const PosteriorDraws draws = nuts_sample(prefix, settings.prior, sampler);
                step.report = bayes_report(draws);
                step.median_p = summarize(draws.column("p")).q50;
                step.median_rho = summarize(draws.column("rho")).q50;
                if (step.t < T) {
                    const Period& next = series.periods[step.t];
                    step.forecast =
                        forecast_one_step(draws, next.n_credits, RngStream(settings.seed, kForecastStream).split(step.t));
                    step.realized_rate = static_cast<double>(next.n_defaults) / static_cast<double>(next.n_credits);
                }
            }
            step.ok = true;
        } catch (const std::exception& e) {
            step.ok = false;
            step.error = e.what();
        }
    });
    return out;
}

}  // namespace vcm
