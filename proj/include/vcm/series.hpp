#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vcm {

/// Exposure and default count of one period.
struct Period {
    std::int64_t n_credits = 0;
    std::int64_t n_defaults = 0;

    friend bool operator==(const Period&, const Period&) = default;
};

/// Observed default history, the only input the estimators see.
struct DefaultSeries {
    std::vector<Period> periods;
    std::string label;

    std::size_t size() const noexcept { return periods.size(); }
    bool empty() const noexcept { return periods.empty(); }
    /// First `length` periods.
    DefaultSeries prefix(std::size_t length) const;

    friend bool operator==(const DefaultSeries&, const DefaultSeries&) = default;
};

/// Throws ValidationError on N < 1, D < 0, D > N, or fewer than `min_length`
/// periods.
void validate(const DefaultSeries& series, std::size_t min_length = 1);

/// Minimum length every estimator requires.
inline constexpr std::size_t kMinEstimationLength = 3;

/// D_t / N_t per period.
std::vector<double> default_rates(const DefaultSeries& series);

}  // namespace vcm
