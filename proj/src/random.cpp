#include "discres/random.hpp"

#include <cmath>
#include <numbers>

namespace discres {

double
uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double
standard_normal(Rng& rng)
{
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t
mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng
stream_rng(std::uint64_t seed, std::uint64_t index)
{
  std::seed_seq seq{ mix64(seed), mix64(seed ^ mix64(index + 1)), index };
  return Rng(seq);
}

} // namespace discres
