#pragma once

#include <cstdint>

namespace snsmart {

// Counter-based generator in the SplitMix64 family.  Each (seed, stream_id)
// pair yields an independent stream; identical pairs yield identical output
// regardless of how many other streams exist or which thread draws from it.
// That property is what makes study results reproducible across parallelism
// levels, so streams must never be shared between work items.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53-bit resolution.
    double uniform();

    // Uniform on (0,1]; safe to pass straight into log().
    double uniform_pos();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    std::uint64_t gamma_;
};

bool sample_bernoulli(RngStream& rng, double p);

double sample_normal(RngStream& rng, double mean, double sd);

// Marsaglia-Tsang; shape < 1 handled through the boost identity.
double sample_gamma(RngStream& rng, double shape, double rate);

// Gamma ratio, result clamped into the open interval (0,1).
double sample_beta(RngStream& rng, double a, double b);

// Index uniform on {0, ..., n-1} without modulo bias.
std::uint64_t sample_index(RngStream& rng, std::uint64_t n);

} // namespace snsmart
