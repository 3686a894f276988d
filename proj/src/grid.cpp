#include "discres/grid.hpp"

#include "discres/error.hpp"

#include <algorithm>
#include <string>

namespace discres {

namespace {
void
check_probability(double s)
{
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("s must lie in (0, 1), got " + std::to_string(s));
}
} // namespace

DistributionGrid
build_grid(const Distribution& dist)
{
  DistributionGrid grid;
  const double tail = 1.0 - Distribution::kTailTolerance;
  CdfWalker walk(dist);
  double previous = 0.0;
  while (walk.next()) {
    const double f = walk.cdf();
    if (f >= 1.0)
      break;
    if (f > previous) {
      grid.values.push_back(f);
      grid.ks.push_back(walk.k());
      previous = f;
    }
    if (f > tail)
      break;
  }
  if (grid.empty())
    throw DegenerateDistributionError("distribution has no CDF value strictly inside (0, 1)");
  return grid;
}

DistributionGrid
build_grid(const Family& family, const LinearPredictor& predictor)
{
  return build_grid(make_distribution(family, predictor));
}

std::optional<double>
h_plus(double s, const DistributionGrid& grid)
{
  check_probability(s);
  const auto it = std::lower_bound(grid.values.begin(), grid.values.end(), s);
  if (it == grid.values.end())
    return std::nullopt;
  return *it;
}

std::optional<double>
h_minus(double s, const DistributionGrid& grid)
{
  check_probability(s);
  const auto it = std::upper_bound(grid.values.begin(), grid.values.end(), s);
  if (it == grid.values.begin())
    return std::nullopt;
  return *(it - 1);
}

NearestGridPoint
h_nearest(double s, const DistributionGrid& grid)
{
  check_probability(s);
  if (grid.empty())
    throw DegenerateDistributionError("h_nearest on an empty grid");
  const auto& v = grid.values;
  const auto plus = std::lower_bound(v.begin(), v.end(), s);
  const auto at = [&](std::vector<double>::const_iterator it, GridSide side) {
    const auto i = static_cast<std::size_t>(it - v.begin());
    return NearestGridPoint{ v[i], grid.ks[i], side };
  };
  // s below F(0|x): only H+ exists.
  if (plus == v.begin())
    return at(plus, GridSide::Plus);
  // s above the largest interior grid value: only H- exists.
  if (plus == v.end())
    return at(plus - 1, GridSide::Minus);
  // H- is the predecessor unless s sits exactly on the grid.
  const auto minus = (*plus == s) ? plus : plus - 1;
  if (*plus + *minus <= 2.0 * s)
    return at(plus, GridSide::Plus);
  return at(minus, GridSide::Minus);
}

double
pit_probability(const Distribution& dist, double s)
{
  check_probability(s);
  CdfWalker walk(dist);
  double below = 0.0;
  while (walk.next()) {
    if (walk.cdf() > s)
      break;
    below = walk.cdf();
  }
  return below;
}

double
pit_probability(const Family& family, const LinearPredictor& predictor, double s)
{
  return pit_probability(make_distribution(family, predictor), s);
}

} // namespace discres
