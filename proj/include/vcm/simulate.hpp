#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vcm/rng.hpp"
#include "vcm/series.hpp"
#include "vcm/vasicek.hpp"

namespace vcm {

/// N_t = a t + b + e_t with e_t ~ N(0, sigma_n), t = 1, 2, ...
struct ExposureModel {
    double a = 500.0;
    double b = 1000.0;
    double sigma_n = 500.0;
};

/// Realised exposures, rounded to the nearest integer and floored at 1.
std::vector<std::int64_t> simulate_exposures(const ExposureModel& model, int horizon, RngStream& rng);

/// Per period: z_t ~ N(0,1), pi_t = pi(z_t), D_t ~ Bin(N_t, pi_t).
DefaultSeries simulate_defaults(const VasicekParams& params, const std::vector<std::int64_t>& exposures,
                                RngStream& rng);

/// Stream id reserved for data generation, so a simulation seed never shares a
/// stream with sampler chains (which use ids 0..C-1).
inline constexpr std::uint64_t kSimulationStream = 0x53494d;

/// Exposures then defaults, both from RngStream(seed, kSimulationStream).
DefaultSeries simulate_series(const VasicekParams& params, int horizon, const ExposureModel& exposure,
                              std::uint64_t seed);

/// Named parameter pair of the simulation study.
struct Preset {
    std::string name;
    double p;
    double rho;
};

/// LL, LH, HL, HH: p in {0.01, 0.05} crossed with rho in {0.1, 0.5}.
const std::vector<Preset>& simulation_presets();
/// Case-insensitive lookup; throws ConfigError for unknown names.
const Preset& find_preset(std::string_view name);
inline constexpr int kPresetHorizon = 20;

}  // namespace vcm
