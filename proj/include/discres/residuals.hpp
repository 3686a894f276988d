#pragma once

#include "discres/fitting.hpp"
#include "discres/random.hpp"

#include <Eigen/Core>

#include <span>
#include <string_view>

namespace discres {

enum class ResidualKind
{
  CoxSnell,
  Pearson,
  Deviance,
  RandomizedQuantile,
};

enum class Reference
{
  Uniform01,
  StandardNormal,
};

std::string_view to_string(ResidualKind kind);

struct ResidualVector
{
  ResidualKind kind = ResidualKind::Pearson;
  Reference reference = Reference::StandardNormal;
  Eigen::VectorXd values;
};

//! P-P curve: reference CDF at the sorted residuals against plotting
//! positions (i - 0.5) / n.
struct PPCurve
{
  Eigen::VectorXd theoretical;
  Eigen::VectorXd empirical;
};

//! Cox-Snell residuals F-hat(Y_i | X_i).
ResidualVector cox_snell(const FittedModel& fitted, const Dataset& data);

//! Empirical distribution of the Cox-Snell residuals on `s_grid`:
//! (1/n) #{i : F-hat(Y_i|X_i) <= s}.
Eigen::VectorXd cox_snell_ecdf(const FittedModel& fitted, const Dataset& data,
                               std::span<const double> s_grid);
Eigen::VectorXd cox_snell_ecdf(const Eigen::VectorXd& cox_snell_values, std::span<const double> s_grid);

//! (Y_i - mu_i) / sqrt(Var(Y_i)), using the fitted distribution's variance
//! (V(mu) for Poisson / NB / Bernoulli).
ResidualVector pearson(const FittedModel& fitted, const Dataset& data);

//! sgn(Y - mu) sqrt(2 [l_saturated - l_fitted]). Poisson, Bernoulli and NB
//! only; throws UnsupportedFamilyError for ZIP/ZOIP.
ResidualVector deviance(const FittedModel& fitted, const Dataset& data);

//! Phi^{-1}(U_i), U_i uniform on (F-hat(Y_i - 1), F-hat(Y_i)].
ResidualVector randomized_quantile(const FittedModel& fitted, const Dataset& data, Rng& rng);

//! The randomized quantile construction for one interval and one uniform
//! draw u in [0, 1): Phi^{-1}(a + (b - a)(1 - u)).
double randomized_quantile_value(double a, double b, double u);

PPCurve pp_curve(const ResidualVector& residuals);

//! One-sample Kolmogorov-Smirnov distance of the residuals from their
//! reference distribution.
double ks_distance(const ResidualVector& residuals);

} // namespace discres
