#pragma once

#include "discres/families.hpp"

#include <optional>
#include <vector>

namespace discres {

//! The attainable CDF values {F(k|x) : k = 0, 1, ...} strictly inside (0, 1),
//! truncated at the family's tail limit. `values[i] == dist.cdf(ks[i])`
//! bit for bit.
struct DistributionGrid
{
  std::vector<double> values;
  std::vector<long> ks;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

enum class GridSide
{
  Plus,
  Minus,
};

//! The interior grid point chosen for a probability s.
struct NearestGridPoint
{
  double value = 0.0;
  long k = 0;
  GridSide side = GridSide::Plus;
};

//! Throws DegenerateDistributionError when no CDF value lies in (0, 1).
DistributionGrid build_grid(const Distribution& dist);
DistributionGrid build_grid(const Family& family, const LinearPredictor& predictor);

//! Smallest grid value >= s; nullopt when s exceeds the largest grid value.
std::optional<double> h_plus(double s, const DistributionGrid& grid);
//! Largest grid value <= s; nullopt when s is below the smallest grid value.
std::optional<double> h_minus(double s, const DistributionGrid& grid);

//! Nearest interior grid point to s. The one-sided clauses are applied first
//! (s below the grid -> H+, s above the grid -> H-); otherwise H+ is chosen
//! when H+ + H- <= 2s (exact comparison, so ties go to H+) and H- otherwise.
NearestGridPoint h_nearest(double s, const DistributionGrid& grid);

//! Exact P(F(Y|x) <= s): F(k|x) for the largest k with F(k|x) <= s, or 0 when
//! s < F(0|x). Equals s iff s is an attainable CDF value.
double pit_probability(const Distribution& dist, double s);
double pit_probability(const Family& family, const LinearPredictor& predictor, double s);

} // namespace discres
