#pragma once

#include <array>
#include <cstdint>

namespace vcm {

/// Reproducible random stream: xoshiro256** seeded from (seed, stream_id)
/// through splitmix64. Satisfies UniformRandomBitGenerator so it can drive
/// the standard library distributions.
///
/// A stream is single-owner. Parallel work obtains independent siblings with
/// split(), never by sharing one instance.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Standard normal by inversion of a uniform draw.
    double normal();
    std::int64_t binomial(std::int64_t n, double p);
    double gamma(double shape);
    double beta(double a, double b);
    /// Beta draw in mean/precision form: Beta(mu*phi, (1-mu)*phi).
    double beta_proportion(double mu, double phi);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Child stream for task `index`; depends only on (seed, stream_id, index).
    RngStream split(std::uint64_t index) const;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> s_;
};

}  // namespace vcm
