#pragma once

#include "discres/error.hpp"
#include "discres/families.hpp"

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

namespace discres {

using CountVector = Eigen::VectorXi;

//! Observations (X_i, Y_i). The design holds every candidate column; model
//! specs pick columns per parameter block. Column 0 is the intercept by
//! convention.
struct Dataset
{
  Eigen::MatrixXd design;
  CountVector outcomes;
  std::vector<std::string> column_names;

  Eigen::Index rows() const { return design.rows(); }
};

//! True when some column takes more than two distinct values. The surrogate
//! diagnostic is only informative with at least one such covariate.
bool has_continuous_covariate(const Dataset& data);

//! A regression model: family, link, and design columns per parameter block.
//! `zero_columns` / `one_columns` are the inflation-logit blocks of ZIP/ZOIP.
//! For NB the size is profiled by maximum likelihood unless `fixed_size` is
//! set, in which case `family.size` is used.
struct ModelSpec
{
  Family family;
  std::vector<Eigen::Index> count_columns;
  std::vector<Eigen::Index> zero_columns;
  std::vector<Eigen::Index> one_columns;
  bool fixed_size = false;

  Eigen::Index parameter_count() const;
};

//! Coefficient vectors per block plus the NB size.
struct Coefficients
{
  Eigen::VectorXd count;
  Eigen::VectorXd zero;
  Eigen::VectorXd one;
  double size = std::numeric_limits<double>::quiet_NaN();
};

struct FitOptions
{
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

struct FittedModel
{
  ModelSpec spec;
  Coefficients coefficients;
  Coefficients std_errors;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;

  //! The family with the estimated NB size filled in.
  Family family() const;
};

//! Newton iterations hit the cap. Carries the last iterate.
class ConvergenceError : public Error
{
public:
  ConvergenceError(const std::string& what, FittedModel last)
    : Error(what)
    , last_(std::move(last))
  {
  }
  const FittedModel& last_iterate() const { return last_; }

private:
  FittedModel last_;
};

//! Checks column references, dimensions and outcome support. Throws
//! DomainError / SingularDesignError / UnsupportedFamilyError.
void validate(const ModelSpec& spec, const Dataset& data);

Eigen::VectorXd pack(const ModelSpec& spec, const Coefficients& coefficients);
Coefficients unpack(const ModelSpec& spec, const Eigen::VectorXd& theta, double size);

//! Linear predictors of observation `row` under the given coefficients.
LinearPredictor linear_predictor(const ModelSpec& spec,
                                 const Coefficients& coefficients,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& row);

double loglik(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients);

//! Analytic gradient of the log-likelihood with respect to the packed
//! coefficients (NB size held fixed).
Eigen::VectorXd score(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients);

//! Analytic Hessian with respect to the packed coefficients.
Eigen::MatrixXd hessian(const ModelSpec& spec, const Dataset& data, const Coefficients& coefficients);

//! Maximum likelihood by damped Newton-Raphson on all blocks jointly.
FittedModel fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options = {});

Distribution predict_distribution(const FittedModel& fitted,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& row);

//! F-hat(k | x).
double predict_cdf(const FittedModel& fitted, const Eigen::Ref<const Eigen::RowVectorXd>& row, long k);

} // namespace discres
