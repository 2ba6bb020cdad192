#pragma once

#include <cstdint>
#include <random>

namespace sampleimp {

// Engine used everywhere a seeded stream is needed. The raw output sequence of
// mt19937_64 is fixed by the standard; the helpers below turn it into reals
// without going through the implementation-defined std distributions.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derive an independent seed for stream `stream` from a parent seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

// Uniform in [0, 1) with 53 bits of resolution.
double uniform01(Rng& rng);

// Uniform in [lo, hi).
double uniform(Rng& rng, double lo, double hi);

// Standard normal via Box-Muller; consumes exactly two draws.
double standard_normal(Rng& rng);

}  // namespace sampleimp
