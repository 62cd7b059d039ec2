#include "vcm/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "vcm/error.hpp"

namespace vcm {

DefaultSeries DefaultSeries::prefix(std::size_t length) const {
    DefaultSeries out;
    out.label = label;
    const std::size_t n = std::min(length, periods.size());
    out.periods.assign(periods.begin(), periods.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

void validate(const DefaultSeries& series, std::size_t min_length) {
    if (series.size() < min_length) {
        throw ValidationError("series '" + series.label + "' has " + std::to_string(series.size()) +
                              " periods; at least " + std::to_string(min_length) + " required");
    }
    for (std::size_t t = 0; t < series.size(); ++t) {
        const Period& period = series.periods[t];
        if (period.n_credits < 1) {
            throw ValidationError("period " + std::to_string(t + 1) + ": n_credits must be >= 1");
        }
        if (period.n_defaults < 0 || period.n_defaults > period.n_credits) {
            throw ValidationError("period " + std::to_string(t + 1) + ": need 0 <= n_defaults <= n_credits");
        }
    }
}

std::vector<double> default_rates(const DefaultSeries& series) {
    std::vector<double> rates;
    rates.reserve(series.size());
    for (const Period& period : series.periods) {
        rates.push_back(static_cast<double>(period.n_defaults) / static_cast<double>(period.n_credits));
    }
    return rates;
}

std::vector<std::int64_t> simulate_exposures(const ExposureModel& model, int horizon, RngStream& rng) {
    if (horizon < 1) throw ConfigError("simulate_exposures: horizon must be >= 1");
    if (!(model.sigma_n >= 0.0)) throw ConfigError("simulate_exposures: sigma_n must be >= 0");
    std::vector<std::int64_t> exposures;
    exposures.reserve(static_cast<std::size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
        const double noise = model.sigma_n > 0.0 ? model.sigma_n * rng.normal() : 0.0;
        const double level = model.a * t + model.b + noise;
        exposures.push_back(std::max<std::int64_t>(1, std::llround(level)));
    }
    return exposures;
}

DefaultSeries simulate_defaults(const VasicekParams& params, const std::vector<std::int64_t>& exposures,
                                RngStream& rng) {
    DefaultSeries series;
    series.periods.reserve(exposures.size());
    for (std::int64_t n : exposures) {
        if (n < 1) throw ValidationError("simulate_defaults: exposures must be >= 1");
        const double pi = sample_pi(params, rng);
        series.periods.push_back({n, rng.binomial(n, pi)});
    }
    return series;
}

DefaultSeries simulate_series(const VasicekParams& params, int horizon, const ExposureModel& exposure,
                              std::uint64_t seed) {
    RngStream rng(seed, kSimulationStream);
    const auto exposures = simulate_exposures(exposure, horizon, rng);
    return simulate_defaults(params, exposures, rng);
}

const std::vector<Preset>& simulation_presets() {
    static const std::vector<Preset> presets{
        {"LL", 0.01, 0.1},
        {"LH", 0.01, 0.5},
        {"HL", 0.05, 0.1},
        {"HH", 0.05, 0.5},
    };
    return presets;
}

const Preset& find_preset(std::string_view name) {
    std::string upper(name);
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Preset& preset : simulation_presets()) {
        if (preset.name == upper) return preset;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected LL, LH, HL or HH)");
}

}  // namespace vcm
