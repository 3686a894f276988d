#pragma once

#include <cstdint>
#include <random>

namespace discres {

//! The library's random engine. Every consumer takes a caller-owned engine;
//! nothing in the library keeps global random state.
using Rng = std::mt19937_64;

//! Uniform draw on [0, 1) from the top 53 bits of one engine output.
//! Portable across standard libraries, unlike std::uniform_real_distribution.
double uniform01(Rng& rng);

//! Standard normal draw (Box-Muller, one engine-pair per draw).
double standard_normal(Rng& rng);

//! splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

//! Independent engine for stream `index` of master seed `seed`.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

} // namespace discres
