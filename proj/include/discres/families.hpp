#pragma once

#include "discres/random.hpp"

#include <limits>
#include <string>
#include <string_view>

namespace discres {

enum class FamilyKind
{
  Poisson,
  NegativeBinomial,
  Bernoulli,
  ZIP,  //!< zero-inflated Poisson
  ZOIP, //!< zero-one-inflated Poisson
};

//! Link of the count/mean block. Inflation blocks of ZIP/ZOIP always use a
//! (multinomial) logit.
enum class Link
{
  Log,
  Logit,
  Sqrt,
  Identity,
};

std::string_view to_string(FamilyKind kind);
std::string_view to_string(Link link);
FamilyKind parse_family(std::string_view name);
Link parse_link(std::string_view name);

//! The canonical link for a family (log for counts, logit for Bernoulli).
Link default_link(FamilyKind kind);

//! A discrete outcome family with its mean link. `size` is the negative
//! binomial size r (variance mean + mean^2 / r); ignored otherwise.
struct Family
{
  FamilyKind kind = FamilyKind::Poisson;
  Link link = Link::Log;
  double size = std::numeric_limits<double>::quiet_NaN();

  bool is_mixture() const { return kind == FamilyKind::ZIP || kind == FamilyKind::ZOIP; }
};

//! Linear predictors at one covariate point. `mean` drives the count/mean
//! block through the family link; `zero` and `one` are the inflation logits
//! (-inf when the block is absent). With both present the inflation
//! probabilities are multinomial-logit:
//!   pi0 = e^zero / (1 + e^zero + e^one),  pi1 = e^one / (1 + e^zero + e^one).
struct LinearPredictor
{
  double mean = 0.0;
  double zero = -std::numeric_limits<double>::infinity();
  double one = -std::numeric_limits<double>::infinity();
};

//! Applies the inverse link. Throws DomainError when the result leaves the
//! family's mean domain.
double inverse_link(Link link, double eta);

struct InflationProbabilities
{
  double pi0 = 0.0;
  double pi1 = 0.0;
};

InflationProbabilities inflation_probabilities(double zero_logit, double one_logit);

//! log(k!), served from a table for small k.
double log_factorial(long k);

//! A fully resolved conditional outcome distribution on {0, 1, ...}.
//!
//! CDF values come from a single forward pass over the PMF (the recurrence
//! pmf(k) = pmf(k-1) * ratio(k)), so every consumer sees bit-identical
//! values for F(k): the grid, the general inverse, sampling, and residuals.
class Distribution
{
public:
  static Distribution poisson(double lambda);
  static Distribution negative_binomial(double size, double mean);
  static Distribution bernoulli(double p);
  static Distribution zip(double pi0, double lambda);
  static Distribution zoip(double pi0, double pi1, double lambda);

  FamilyKind kind() const { return kind_; }
  //! Poisson rate, NB mean, or Bernoulli success probability.
  double location() const { return location_; }
  double size() const { return size_; }
  double pi0() const { return pi0_; }
  double pi1() const { return pi1_; }

  double pmf(long k) const;
  double log_pmf(long k) const;
  double cdf(long k) const;
  //! lim_{y -> k-} F(y) = F(k - 1), with F(-1) = 0.
  double cdf_left(long k) const;
  //! Smallest k with s <= F(k), for s in (0, 1).
  long general_inverse(double s) const;
  //! Smallest K with F(K) > 1 - kTailTolerance.
  long tail_limit() const;
  //! Inversion sampling on the same CDF pass.
  long sample(Rng& rng) const;

  double mean() const;
  double variance() const;

  static constexpr double kTailTolerance = 1e-12;

private:
  friend class CdfWalker;

  FamilyKind kind_ = FamilyKind::Poisson;
  double location_ = 0.0;
  double size_ = std::numeric_limits<double>::quiet_NaN();
  double pi0_ = 0.0;
  double pi1_ = 0.0;
};

//! Forward iterator over (k, pmf(k), F(k)) for every k carrying representable
//! mass, in increasing k. For very large means the far lower tail, whose mass
//! is below 1e-300, is skipped; k = 0 (and k = 1 for ZOIP) are always visited
//! for mixtures.
class CdfWalker
{
public:
  explicit CdfWalker(const Distribution& dist);

  //! Advances to the next support point. Returns false when the mass is
  //! exhausted.
  bool next();

  long k() const { return k_; }
  double pmf() const { return pmf_; }
  double cdf() const { return cdf_; }

private:
  bool next_base();

  const Distribution& dist_;
  // base count distribution state
  long base_k_ = -1;
  double base_pmf_ = 0.0;
  double base_cdf_ = 0.0;
  long base_start_ = 0;
  long base_mode_ = 0;
  long explicit_until_ = 0;
  bool base_done_ = false;
  // emitted state
  long k_ = -1;
  double pmf_ = 0.0;
  double cdf_ = 0.0;
};

//! Resolves a family and its linear predictors into a distribution.
Distribution make_distribution(const Family& family, const LinearPredictor& predictor);

double pmf(const Family& family, long k, const LinearPredictor& predictor);
double cdf(const Family& family, long k, const LinearPredictor& predictor);
double cdf_left(const Family& family, long k, const LinearPredictor& predictor);
long general_inverse(const Family& family, double s, const LinearPredictor& predictor);
long sample(const Family& family, const LinearPredictor& predictor, Rng& rng);

//! Variance function V(mean) used by Pearson residuals.
double variance_function(const Family& family, double mean);

//! Per-observation log-likelihood at the saturated fit (mean = y).
double saturated_loglik(const Family& family, long y);

} // namespace discres
