#include "discres/residuals.hpp"

#include "discres/normal.hpp"

#include <algorithm>
#include <cmath>

namespace discres {

namespace {

double
reference_cdf(Reference reference, double x)
{
  if (reference == Reference::StandardNormal)
    return normal_cdf(x);
  return std::clamp(x, 0.0, 1.0);
}

double
sign(double x)
{
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

} // namespace

std::string_view
to_string(ResidualKind kind)
{
  switch (kind) {
    case ResidualKind::CoxSnell:
      return "cox-snell";
    case ResidualKind::Pearson:
      return "pearson";
    case ResidualKind::Deviance:
      return "deviance";
    case ResidualKind::RandomizedQuantile:
      return "quantile";
  }
  return "unknown";
}

ResidualVector
cox_snell(const FittedModel& fitted, const Dataset& data)
{
  ResidualVector r{ ResidualKind::CoxSnell, Reference::Uniform01, Eigen::VectorXd(data.rows()) };
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    r.values(i) = predict_cdf(fitted, data.design.row(i), data.outcomes(i));
  return r;
}

Eigen::VectorXd
cox_snell_ecdf(const Eigen::VectorXd& values, std::span<const double> s_grid)
{
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(s_grid.size()));
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), s_grid[j]) - sorted.begin();
    out(static_cast<Eigen::Index>(j)) = static_cast<double>(count) / n;
  }
  return out;
}

Eigen::VectorXd
cox_snell_ecdf(const FittedModel& fitted, const Dataset& data, std::span<const double> s_grid)
{
  return cox_snell_ecdf(cox_snell(fitted, data).values, s_grid);
}

ResidualVector
pearson(const FittedModel& fitted, const Dataset& data)
{
  ResidualVector r{ ResidualKind::Pearson, Reference::StandardNormal, Eigen::VectorXd(data.rows()) };
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto dist = predict_distribution(fitted, data.design.row(i));
    const double var = dist.variance();
    if (!(var > 0.0))
      throw DegenerateFitError("zero fitted variance at observation " + std::to_string(i + 1));
    r.values(i) = (static_cast<double>(data.outcomes(i)) - dist.mean()) / std::sqrt(var);
  }
  return r;
}

ResidualVector
deviance(const FittedModel& fitted, const Dataset& data)
{
  const Family family = fitted.family();
  if (family.is_mixture())
    throw UnsupportedFamilyError("deviance residuals are not defined for " +
                                 std::string(to_string(family.kind)) +
                                 " (more than one location parameter)");
  ResidualVector r{ ResidualKind::Deviance, Reference::StandardNormal, Eigen::VectorXd(data.rows()) };
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const long y = data.outcomes(i);
    const auto dist = predict_distribution(fitted, data.design.row(i));
    const double gap = saturated_loglik(family, y) - dist.log_pmf(y);
    r.values(i) = sign(static_cast<double>(y) - dist.mean()) * std::sqrt(2.0 * std::max(gap, 0.0));
  }
  return r;
}

double
randomized_quantile_value(double a, double b, double u)
{
  return normal_quantile(a + (b - a) * (1.0 - u));
}

ResidualVector
randomized_quantile(const FittedModel& fitted, const Dataset& data, Rng& rng)
{
  ResidualVector r{ ResidualKind::RandomizedQuantile, Reference::StandardNormal,
                    Eigen::VectorXd(data.rows()) };
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const long y = data.outcomes(i);
    const auto dist = predict_distribution(fitted, data.design.row(i));
    r.values(i) = randomized_quantile_value(dist.cdf_left(y), dist.cdf(y), uniform01(rng));
  }
  return r;
}

PPCurve
pp_curve(const ResidualVector& residuals)
{
  const Eigen::Index n = residuals.values.size();
  std::vector<double> sorted(residuals.values.data(), residuals.values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  PPCurve curve{ Eigen::VectorXd(n), Eigen::VectorXd(n) };
  for (Eigen::Index i = 0; i < n; ++i) {
    curve.theoretical(i) = reference_cdf(residuals.reference, sorted[static_cast<std::size_t>(i)]);
    curve.empirical(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }
  return curve;
}

double
ks_distance(const ResidualVector& residuals)
{
  const Eigen::Index n = residuals.values.size();
  std::vector<double> sorted(residuals.values.data(), residuals.values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(n);
  double d = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = reference_cdf(residuals.reference, sorted[static_cast<std::size_t>(i)]);
    // Ties: the empirical CDF jumps once at the last of a run of equal values.
    const auto ii = static_cast<std::size_t>(i);
    if (ii + 1 < sorted.size() && sorted[ii + 1] == sorted[ii]) {
      d = std::max(d, f - static_cast<double>(i) / nd);
      continue;
    }
    d = std::max({ d, static_cast<double>(i + 1) / nd - f, f - static_cast<double>(i) / nd });
  }
  return d;
}

} // namespace discres
