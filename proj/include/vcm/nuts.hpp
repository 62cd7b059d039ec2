#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vcm/posterior.hpp"
#include "vcm/rng.hpp"

namespace vcm {

struct NutsSettings {
    int warmup = 1000;
    int draws = 1000;
    double target_accept = 0.8;
    int max_depth = 10;
    /// Starting point of the initial step-size search.
    double initial_step_size = 1.0;
    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Per-iteration sampler statistics.
struct SamplerStats {
    double accept_stat = 0.0;
    double step_size = 0.0;
    int tree_depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
    double energy = 0.0;
    double log_density = 0.0;
};

/// Post-warmup output of one chain, in unconstrained coordinates.
struct ChainResult {
    std::size_t dimension = 0;
    std::vector<double> draws;  // draws x dimension, row-major
    std::vector<SamplerStats> stats;
    std::vector<double> inv_metric;
    double step_size = 0.0;
};

/// Runs one multinomial NUTS chain from `init`, adapting step size and a
/// diagonal metric during warmup.
ChainResult run_nuts_chain(const LogDensityModel& model, std::vector<double> init, const NutsSettings& settings,
                           RngStream& rng);

/// Position, momentum and cached log density / gradient.
struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> grad;
    double log_density = 0.0;
};

PhasePoint make_phase_point(const LogDensityModel& model, std::vector<double> q, std::vector<double> p);
/// One leapfrog step with diagonal inverse metric.
void leapfrog(const LogDensityModel& model, PhasePoint& z, double step_size, std::span<const double> inv_metric);
/// -log density + 0.5 p' M^{-1} p.
double hamiltonian(const PhasePoint& z, std::span<const double> inv_metric);

/// Standard-normal target of arbitrary dimension, for testing the engine.
class StandardNormalModel final : public LogDensityModel {
public:
    explicit StandardNormalModel(std::size_t dimension) : dimension_(dimension) {}
    std::size_t dimension() const override { return dimension_; }
    double log_density_gradient(std::span<const double> q, std::span<double> grad) const override;

private:
    std::size_t dimension_;
};

}  // namespace vcm
