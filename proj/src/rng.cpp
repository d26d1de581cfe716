#include "snsmart/rng.hpp"

#include <bit>
#include <cmath>

#include "snsmart/errors.hpp"

namespace snsmart {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Variant without the increment, for hashing fixed values.
inline std::uint64_t hash64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    state_ = hash64(seed ^ hash64(stream_id));
    // Per-stream increment must be odd and not too regular; near-alternating
    // bit patterns weaken the mix, so reject them the way SplittableRandom
    // does and fall back to a re-hashed value.
    std::uint64_t g = hash64(stream_id ^ 0x9E3779B97F4A7C15ULL) | 1ULL;
    if (std::popcount(g ^ (g >> 1)) < 24) {
        g = (g ^ 0xAAAAAAAAAAAAAAAAULL) | 1ULL;
    }
    gamma_ = g;
}

std::uint64_t RngStream::next_u64() {
    state_ += gamma_;
    return hash64(state_);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

bool sample_bernoulli(RngStream& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("sample_bernoulli: p must lie in [0,1]");
    }
    return rng.uniform() < p;
}

double sample_normal(RngStream& rng, double mean, double sd) {
    if (!(sd >= 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
        throw DomainError("sample_normal: invalid mean or sd");
    }
    // Marsaglia polar method.  The second deviate is discarded so that the
    // stream consumption per call does not depend on call history.
    for (;;) {
        const double u = 2.0 * rng.uniform() - 1.0;
        const double v = 2.0 * rng.uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return mean + sd * u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

double sample_gamma(RngStream& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw DomainError("sample_gamma: shape and rate must be positive");
    }
    if (shape < 1.0) {
        const double u = rng.uniform_pos();
        return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_normal(rng, 0.0, 1.0);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v / rate;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v / rate;
        }
    }
}

double sample_beta(RngStream& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw DomainError("sample_beta: shapes must be positive");
    }
    const double x = sample_gamma(rng, a, 1.0);
    const double y = sample_gamma(rng, b, 1.0);
    double r = x / (x + y);
    // Downstream code takes logs of both r and 1-r; keep strictly interior.
    constexpr double kTiny = 1e-300;
    if (r < kTiny) r = kTiny;
    if (r > 1.0 - 1e-16) r = 1.0 - 1e-16;
    return r;
}

std::uint64_t sample_index(RngStream& rng, std::uint64_t n) {
    if (n == 0) {
        throw DomainError("sample_index: n must be positive");
    }
    // Multiply-shift: maps a 64-bit draw onto {0..n-1} with bias below 2^-64.
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(rng.next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
}

} // namespace snsmart
