#include <algorithm>
#include <cmath>
#include <functional>

#include "vcm/bayes.hpp"
#include "vcm/error.hpp"
#include "vcm/parallel.hpp"

namespace vcm {

void SamplerConfig::validate() const {
    if (chains < 1) throw ConfigError("sampler.chains must be >= 1");
    nuts().validate();
}

NutsSettings SamplerConfig::nuts() const {
    NutsSettings s;
    s.warmup = warmup;
    s.draws = draws;
    s.target_accept = target_accept;
    s.max_depth = max_depth;
    return s;
}

std::size_t PosteriorDraws::index_of(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DomainError("no parameter named '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> PosteriorDraws::column(std::size_t param) const {
    std::vector<double> out;
    out.reserve(total_draws());
    for (std::size_t c = 0; c < chains; ++c) {
        for (std::size_t s = 0; s < draws_per_chain; ++s) out.push_back(at(c, s, param));
    }
    return out;
}

std::vector<std::vector<double>> PosteriorDraws::chain_columns(std::size_t param) const {
    std::vector<std::vector<double>> out(chains);
    for (std::size_t c = 0; c < chains; ++c) {
        out[c].reserve(draws_per_chain);
        for (std::size_t s = 0; s < draws_per_chain; ++s) out[c].push_back(at(c, s, param));
    }
    return out;
}

int PosteriorDraws::divergences() const {
    return static_cast<int>(std::count_if(stats.begin(), stats.end(), [](const SamplerStats& s) { return s.divergent; }));
}

int PosteriorDraws::max_treedepth_hits() const {
    const int cap = meta.max_depth;
    return static_cast<int>(
        std::count_if(stats.begin(), stats.end(), [cap](const SamplerStats& s) { return s.tree_depth >= cap; }));
}

namespace {

using Constrain = std::function<void(std::span<const double>, std::span<double>)>;
using Initial = std::function<std::vector<double>(RngStream&)>;

PosteriorDraws run_chains(const LogDensityModel& model, std::vector<std::string> names, const SamplerConfig& config,
                          const Initial& initial, const Constrain& constrain) {
    config.validate();
    const auto C = static_cast<std::size_t>(config.chains);
    const auto S = static_cast<std::size_t>(config.draws);
    const std::size_t dim = model.dimension();
    const std::size_t K = names.size();
    const NutsSettings settings = config.nuts();

    std::vector<ChainResult> results(C);
    parallel_for(C, config.threads, [&](std::size_t c) {
        RngStream rng(config.seed, c);
        std::vector<double> init = initial(rng);
        results[c] = run_nuts_chain(model, std::move(init), settings, rng);
    });

    PosteriorDraws out;
    out.names = std::move(names);
    out.chains = C;
    out.draws_per_chain = S;
    out.values.resize(C * S * K);
    out.stats.reserve(C * S);
    out.meta.warmup = config.warmup;
    out.meta.max_depth = config.max_depth;
    out.meta.seed = config.seed;
    out.meta.parameterization = resolve_parameterization(config.parameterization, config.include_likelihood);
    out.meta.include_likelihood = config.include_likelihood;
    for (std::size_t c = 0; c < C; ++c) {
        const ChainResult& r = results[c];
        for (std::size_t s = 0; s < S; ++s) {
            std::span<const double> q(r.draws.data() + s * dim, dim);
            std::span<double> dst(out.values.data() + (c * S + s) * K, K);
            constrain(q, dst);
        }
        out.stats.insert(out.stats.end(), r.stats.begin(), r.stats.end());
        out.step_sizes.push_back(r.step_size);
    }
    out.divergence_warning = static_cast<double>(out.divergences()) > 0.01 * static_cast<double>(C * S);
    return out;
}

}  // namespace

PosteriorDraws nuts_sample(const DefaultSeries& series, const PriorConfig& prior, const SamplerConfig& config) {
    if (config.include_likelihood) validate(series);
    const VasicekPosterior model(series, prior, {config.parameterization, config.include_likelihood});
    PosteriorDraws draws = run_chains(
        model, model.output_names(), config, [&](RngStream& rng) { return model.initial_point(rng); },
        [&](std::span<const double> q, std::span<double> out) { model.constrain(q, out); });
    draws.meta.prior = prior;
    draws.meta.label = series.label;
    return draws;
}

PosteriorDraws sample_model(const LogDensityModel& model, std::vector<std::string> names,
                            const SamplerConfig& config) {
    if (names.size() != model.dimension()) throw DomainError("one name per model coordinate required");
    const std::size_t dim = model.dimension();
    return run_chains(
        model, std::move(names), config,
        [dim](RngStream& rng) {
            std::vector<double> q(dim);
            for (double& x : q) x = 4.0 * rng.uniform() - 2.0;
            return q;
        },
        [](std::span<const double> q, std::span<double> out) { std::copy(q.begin(), q.end(), out.begin()); });
}

double posterior_event_prob(const PosteriorDraws& draws_a, const PosteriorDraws& draws_b, EventParam which) {
    const char* name = which == EventParam::p ? "p" : "rho";
    const std::vector<double> a = draws_a.column(name);
    const std::vector<double> b = draws_b.column(name);
    const std::size_t m = std::min(a.size(), b.size());
    if (m == 0) throw DomainError("posterior_event_prob needs non-empty draws");
    // Unequal sizes: evenly spaced indices into the larger set.
    std::size_t wins = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = a[i * a.size() / m];
        const double y = b[i * b.size() / m];
        if (x > y) ++wins;
    }
    return static_cast<double>(wins) / static_cast<double>(m);
}

}  // namespace vcm
