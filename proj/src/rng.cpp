#include "vcm/rng.hpp"

#include <random>

#include "vcm/special.hpp"

namespace vcm {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a;
    std::uint64_t h = splitmix64(x);
    std::uint64_t y = b ^ 0xD1B54A32D192ED03ULL;
    return h ^ (splitmix64(y) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t x = mix(seed, stream_id);
    for (auto& word : s_) word = splitmix64(x);
}

RngStream::result_type RngStream::operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return norm_quantile(uniform()); }

std::int64_t RngStream::binomial(std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::int64_t> dist(n, p);
    return dist(*this);
}

double RngStream::gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(*this);
}

double RngStream::beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    if (x + y <= 0.0) return uniform() < a / (a + b) ? 1.0 : 0.0;
    return x / (x + y);
}

double RngStream::beta_proportion(double mu, double phi) { return beta(mu * phi, (1.0 - mu) * phi); }

std::uint64_t RngStream::below(std::uint64_t n) {
    // Lemire's nearly-divisionless method.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>((*this)()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

RngStream RngStream::split(std::uint64_t index) const {
    return RngStream(seed_, mix(stream_id_ + 0x5851F42D4C957F2DULL, index));
}

}  // namespace vcm
