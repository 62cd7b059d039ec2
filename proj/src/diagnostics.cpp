#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcm/bayes.hpp"
#include "vcm/bootstrap.hpp"
#include "vcm/error.hpp"
#include "vcm/special.hpp"

namespace vcm {

namespace {

using Chains = std::vector<std::vector<double>>;

void check_shape(const Chains& chains) {
    if (chains.empty()) throw DomainError("diagnostics need at least one chain");
    const std::size_t n = chains.front().size();
    if (n < 4) throw DomainError("diagnostics need at least 4 draws per chain");
    for (const auto& c : chains) {
        if (c.size() != n) throw DomainError("chains must have equal length");
    }
}

// Each chain cut into a first and second half; an odd middle draw is dropped.
Chains split(const Chains& chains) {
    Chains out;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

// Pooled ranks (ties averaged) mapped to normal scores.
Chains rank_normalize(const Chains& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    const std::size_t total = m * n;
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(total);
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) pooled.emplace_back(chains[c][i], c * n + i);
    }
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> rank(total);
    for (std::size_t i = 0; i < total;) {
        std::size_t j = i;
        while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = r;
        i = j + 1;
    }
    Chains out(m, std::vector<double>(n));
    const double denom = static_cast<double>(total) + 0.25;
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t i = 0; i < n; ++i) out[c][i] = norm_quantile((rank[c * n + i] - 0.375) / denom);
    }
    return out;
}

double mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
    const double mu = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
}

// Potential scale reduction of already-split chains.
double rhat_raw(const Chains& chains) {
    const auto n = static_cast<double>(chains.front().size());
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains) {
        means.push_back(mean(c));
        vars.push_back(sample_variance(c));
    }
    const double B = n * (chains.size() > 1 ? sample_variance(means) : 0.0);
    const double W = mean(vars);
    if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : kUndefinedDiagnostic;
    const double var_plus = (n - 1.0) / n * W + B / n;
    return std::sqrt(var_plus / W);
}

// Autocovariance at `lag` (biased, divide by n) of one chain.
double autocov(const std::vector<double>& x, double mu, std::size_t lag) {
    const std::size_t n = x.size();
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
    return s / static_cast<double>(n);
}

// Multi-chain ESS with Geyer's initial positive sequence, made monotone.
double ess_raw(const Chains& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<double> means(m);
    std::vector<double> acov0(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = mean(chains[c]);
        acov0[c] = autocov(chains[c], means[c], 0);
    }
    const double dn = static_cast<double>(n);
    double mean_var = 0.0;
    for (double a : acov0) mean_var += a * dn / (dn - 1.0);
    mean_var /= static_cast<double>(m);
    double var_plus = mean_var * (dn - 1.0) / dn;
    if (m > 1) var_plus += sample_variance(means);
    if (!(var_plus > 0.0)) return kUndefinedDiagnostic;

    auto rho_at = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += autocov(chains[c], means[c], lag);
        return 1.0 - (mean_var - s / static_cast<double>(m)) / var_plus;
    };

    std::vector<double> rho_hat(n + 2, 0.0);
    rho_hat[0] = 1.0;
    double rho_even = 1.0;
    double rho_odd = rho_at(1);
    rho_hat[1] = rho_odd;
    std::size_t t = 1;
    while (t + 5 < n && !std::isnan(rho_even + rho_odd) && rho_even + rho_odd > 0.0) {
        rho_even = rho_at(t + 1);
        rho_odd = rho_at(t + 2);
        if (rho_even + rho_odd >= 0.0) {
            rho_hat[t + 1] = rho_even;
            rho_hat[t + 2] = rho_odd;
        }
        t += 2;
    }
    const std::size_t max_t = t;
    if (rho_even > 0.0) rho_hat[max_t + 1] = rho_even;

    for (std::size_t s = 1; s + 2 <= max_t; s += 2) {
        if (rho_hat[s + 1] + rho_hat[s + 2] > rho_hat[s - 1] + rho_hat[s]) {
            rho_hat[s + 1] = 0.5 * (rho_hat[s - 1] + rho_hat[s]);
            rho_hat[s + 2] = rho_hat[s + 1];
        }
    }

    const double total = static_cast<double>(m * n);
    double tau = -1.0 + rho_hat[max_t + 1];
    for (std::size_t s = 0; s <= max_t; ++s) tau += 2.0 * rho_hat[s];
    tau = std::max(tau, 1.0 / std::log10(total));
    return std::min(total / tau, total);
}

bool all_constant(const Chains& chains) {
    const double first = chains.front().front();
    for (const auto& c : chains) {
        for (double v : c) {
            if (v != first) return false;
        }
    }
    return true;
}

}  // namespace

double split_rhat(const Chains& chains) {
    check_shape(chains);
    if (all_constant(chains)) return kUndefinedDiagnostic;
    const Chains halves = split(chains);
    const double bulk = rhat_raw(rank_normalize(halves));

    // Folded draws catch scale differences the bulk version misses.
    std::vector<double> pooled;
    for (const auto& c : halves) pooled.insert(pooled.end(), c.begin(), c.end());
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(pooled.size() / 2), pooled.end());
    const double median = pooled[pooled.size() / 2];
    Chains folded = halves;
    for (auto& c : folded) {
        for (double& v : c) v = std::abs(v - median);
    }
    const double tail = all_constant(folded) ? bulk : rhat_raw(rank_normalize(folded));
    if (std::isnan(bulk) || std::isnan(tail)) return std::isnan(bulk) ? tail : bulk;
    return std::max(bulk, tail);
}

double ess_bulk(const Chains& chains) {
    check_shape(chains);
    if (all_constant(chains)) return kUndefinedDiagnostic;
    return ess_raw(rank_normalize(split(chains)));
}

double ess_basic(const Chains& chains) {
    check_shape(chains);
    if (all_constant(chains)) return kUndefinedDiagnostic;
    return ess_raw(split(chains));
}

double Diagnostics::rhat_of(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DomainError("no parameter named '" + std::string(name) + "'");
    return rhat[static_cast<std::size_t>(it - names.begin())];
}

double Diagnostics::ess_of(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DomainError("no parameter named '" + std::string(name) + "'");
    return ess_bulk[static_cast<std::size_t>(it - names.begin())];
}

Diagnostics diagnostics(const PosteriorDraws& draws) {
    if (draws.chains < 2) throw DomainError("diagnostics need at least 2 chains");
    if (draws.draws_per_chain < 4) throw DomainError("diagnostics need at least 4 draws per chain");
    Diagnostics d;
    d.names = draws.names;
    for (std::size_t j = 0; j < draws.num_params(); ++j) {
        const auto chains = draws.chain_columns(j);
        const double r = split_rhat(chains);
        d.rhat.push_back(r);
        d.ess_bulk.push_back(ess_bulk(chains));
        if (std::isnan(r)) d.undefined.push_back(draws.names[j]);
    }
    d.divergences = draws.divergences();
    d.max_treedepth_hits = draws.max_treedepth_hits();
    return d;
}

ParamSummary summarize(std::span<const double> values) {
    if (values.empty()) throw DomainError("summarize of an empty set");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    ParamSummary s;
    s.mean = mean(sorted);
    s.sd = sorted.size() > 1 ? std::sqrt(sample_variance(sorted)) : 0.0;
    s.q025 = sorted_quantile(sorted, 0.025);
    s.q05 = sorted_quantile(sorted, 0.05);
    s.q25 = sorted_quantile(sorted, 0.25);
    s.q50 = sorted_quantile(sorted, 0.5);
    s.q75 = sorted_quantile(sorted, 0.75);
    s.q95 = sorted_quantile(sorted, 0.95);
    s.q975 = sorted_quantile(sorted, 0.975);
    return s;
}

}  // namespace vcm
