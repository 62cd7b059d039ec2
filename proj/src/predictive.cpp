#include "vcm/predictive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "vcm/bootstrap.hpp"
#include "vcm/error.hpp"
#include "vcm/special.hpp"
#include "vcm/vasicek.hpp"

namespace vcm {

std::vector<double> PredictiveDraws::rates(std::size_t rep) const {
    std::vector<double> out(periods());
    for (std::size_t t = 0; t < periods(); ++t) {
        out[t] = static_cast<double>(at(rep, t)) / static_cast<double>(exposures[t]);
    }
    return out;
}

PredictiveDraws posterior_predictive(const PosteriorDraws& draws, const DefaultSeries& series, std::size_t s_rep,
                                     RngStream rng, LatentMode mode) {
    const std::size_t total = draws.total_draws();
    if (s_rep == 0 || s_rep > total) throw DomainError("posterior_predictive: need 1 <= s_rep <= posterior draws");
    const std::size_t T = series.size();
    const std::size_t ip = draws.index_of("p");
    const std::size_t ir = draws.index_of("rho");
    std::size_t ipi = 0;
    if (mode == LatentMode::fitted) {
        if (T == 0) throw DomainError("posterior_predictive: empty series");
        ipi = draws.index_of("pi[1]");
        if (draws.num_params() < ipi + T) throw DomainError("posterior draws have fewer pi_t than the series");
    }

    PredictiveDraws out;
    for (const Period& period : series.periods) out.exposures.push_back(period.n_credits);
    out.replicates = s_rep;
    out.defaults.resize(s_rep * T);
    out.source.resize(s_rep);
    const std::size_t K = draws.num_params();
    for (std::size_t s = 0; s < s_rep; ++s) {
        const std::size_t flat = s * total / s_rep;
        out.source[s] = flat;
        const double* row = draws.values.data() + flat * K;
        const VasicekParams params(row[ip], row[ir]);
        for (std::size_t t = 0; t < T; ++t) {
            const double pi = mode == LatentMode::fitted ? row[ipi + t] : sample_pi(params, rng);
            out.defaults[s * T + t] = rng.binomial(out.exposures[t], pi);
        }
    }
    return out;
}

std::string_view to_string(PpcStatistic statistic) {
    return statistic == PpcStatistic::median ? "median" : "iqr";
}

PpcStatistic parse_statistic(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "median") return PpcStatistic::median;
    if (lower == "iqr" || lower == "range") return PpcStatistic::iqr;
    throw ConfigError("unknown statistic '" + std::string(name) + "' (expected median or iqr)");
}

double ppc_statistic(std::span<const double> rates, PpcStatistic statistic) {
    if (rates.empty()) throw DomainError("ppc_statistic of an empty set");
    std::vector<double> sorted(rates.begin(), rates.end());
    std::sort(sorted.begin(), sorted.end());
    if (statistic == PpcStatistic::median) return sorted_quantile(sorted, 0.5);
    return sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
}

double ppc_pvalue(const PredictiveDraws& pred, const DefaultSeries& series, PpcStatistic statistic) {
    if (pred.replicates < 100) throw DomainError("ppc_pvalue needs at least 100 replicates");
    if (pred.periods() != series.size()) throw DomainError("replicates and series differ in length");
    const double observed = ppc_statistic(default_rates(series), statistic);
    std::size_t at_least = 0;
    for (std::size_t s = 0; s < pred.replicates; ++s) {
        if (ppc_statistic(pred.rates(s), statistic) >= observed) ++at_least;
    }
    return static_cast<double>(at_least) / static_cast<double>(pred.replicates);
}

double silverman_bandwidth(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sorted) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

DensityGrid kernel_density(std::span<const double> values, std::size_t points, std::optional<Interval> range) {
    if (values.empty()) throw DomainError("kernel_density of an empty set");
    if (points < 2) throw DomainError("kernel_density needs at least 2 grid points");
    DensityGrid grid;
    double h = silverman_bandwidth(values);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    if (!(h > 0.0)) h = std::max(1e-3 * std::abs(*mn), 1e-12);  // degenerate sample: a narrow bump
    grid.bandwidth = h;
    const double lo = range ? range->lo : *mn - 3.0 * h;
    const double hi = range ? range->hi : *mx + 3.0 * h;
    const double step = (hi - lo) / static_cast<double>(points - 1);
    const double norm = 1.0 / (static_cast<double>(values.size()) * h);
    grid.x.resize(points);
    grid.density.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + step * static_cast<double>(i);
        double s = 0.0;
        for (double v : values) s += norm_pdf((x - v) / h);
        grid.x[i] = x;
        grid.density[i] = s * norm;
    }
    return grid;
}

ForecastResult forecast_one_step(const PosteriorDraws& draws, std::int64_t next_exposure, RngStream rng) {
    if (next_exposure < 1) throw DomainError("forecast_one_step: next_exposure must be >= 1");
    const std::size_t ip = draws.index_of("p");
    const std::size_t ir = draws.index_of("rho");
    const std::size_t K = draws.num_params();
    const std::size_t total = draws.total_draws();
    if (total == 0) throw DomainError("forecast_one_step: no posterior draws");

    ForecastResult out;
    out.horizon_exposure = next_exposure;
    out.draws.reserve(total);
    std::vector<double> rates;
    rates.reserve(total);
    const auto n = static_cast<double>(next_exposure);
    for (std::size_t i = 0; i < total; ++i) {
        const double* row = draws.values.data() + i * K;
        const double pi = sample_pi(VasicekParams(row[ip], row[ir]), rng);
        const std::int64_t d = rng.binomial(next_exposure, pi);
        out.draws.push_back(d);
        rates.push_back(static_cast<double>(d) / n);
    }
    std::sort(rates.begin(), rates.end());
    out.interval50 = {sorted_quantile(rates, 0.25), sorted_quantile(rates, 0.75)};
    out.interval90 = {sorted_quantile(rates, 0.05), sorted_quantile(rates, 0.95)};
    out.median_rate = sorted_quantile(rates, 0.5);
    return out;
}

}  // namespace vcm
