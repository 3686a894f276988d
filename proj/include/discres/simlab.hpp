#pragma once

#include "discres/fitting.hpp"
#include "discres/random.hpp"
#include "discres/surrogate.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace discres {

//! Joint law of the simulated covariates (x1, x2); the design is
//! [1, x1, x2].
enum class CovariateLaw
{
  NormalAndBernoulli, //!< x1 ~ N(0,1), x2 ~ Bernoulli(p), independent
  TwoNormals,         //!< x1, x2 ~ N(0,1), independent
};

std::string_view to_string(CovariateLaw law);
CovariateLaw parse_covariate_law(std::string_view name);

//! A model fitted to every simulated dataset of a scenario.
struct FitCandidate
{
  std::string label;
  ModelSpec spec;
  bool true_model = false;
};

//! A data-generating process plus the models fitted to it.
struct Scenario
{
  std::string name;
  std::string description;
  ModelSpec generator;
  Coefficients truth;
  CovariateLaw covariates = CovariateLaw::NormalAndBernoulli;
  double bernoulli_probability = 0.7;
  std::vector<FitCandidate> fits;
  std::string provenance = "registered";

  //! The fit candidate marked as the true model (the first one if none is).
  const FitCandidate& true_fit() const;
};

//! The nine scenarios of the simulation study with their published
//! parameter values.
const std::vector<Scenario>& registered_scenarios();

//! Looks up a registered scenario; UsageError listing the names otherwise.
const Scenario& find_scenario(const std::string& name);

std::vector<std::string> scenario_names();

//! n draws of (x1, x2, y). Deterministic given the engine state.
Dataset generate(const Scenario& scenario, std::size_t n, Rng& rng);

struct MethodSet
{
  bool surrogate = true;
  bool cox_snell = true;
  bool pearson = true;
  bool deviance = true;
  bool quantile = true;

  //! Comma-separated subset of surrogate, cox-snell, pearson, deviance,
  //! quantile; "all" selects everything.
  static MethodSet parse(const std::string& list);
  std::string to_string() const;
};

struct StudyOptions
{
  DiagnosticOptions diagnostic;
  double sup_lo = 0.2;
  double sup_hi = 0.8;
  FitOptions fit;
  int workers = 1;
};

//! One fit candidate on one replication.
struct FitReplication
{
  bool ok = false;
  std::string error;
  Coefficients coefficients;
  Coefficients std_errors;
  double bandwidth = 0.0;
  std::optional<double> sup_deviation;
  std::optional<double> l2;
  std::vector<std::optional<double>> curve; //!< U-hat on the s-grid
  std::optional<double> ks_cox_snell;
  std::optional<double> ks_pearson;
  std::optional<double> ks_deviance;
  std::optional<double> ks_quantile;
};

struct Replication
{
  std::uint64_t index = 0;
  std::vector<FitReplication> fits;
};

//! Quantile envelope of the replicated curves.
struct Envelope
{
  std::vector<double> s;
  std::vector<std::optional<double>> lower;  //!< 5% quantile
  std::vector<std::optional<double>> median; //!< 50% quantile
  std::vector<std::optional<double>> upper;  //!< 95% quantile
  //! Fraction of s-grid points where lower <= s <= upper.
  double diagonal_coverage = 0.0;
};

struct FitSummary
{
  std::string label;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::optional<double> median_sup_deviation;
  std::optional<double> mean_sup_deviation;
  std::optional<double> median_l2;
  std::optional<double> mean_l2;
  std::optional<double> median_ks_cox_snell;
  std::optional<double> median_ks_pearson;
  std::optional<double> median_ks_deviance;
  std::optional<double> median_ks_quantile;
  Envelope envelope;
};

struct StudyResult
{
  std::string scenario;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  MethodSet methods;
  std::vector<double> s_grid;
  std::vector<Replication> replications;
  std::vector<FitSummary> summaries;
};

//! Replication r uses stream_rng(seed, r): generate, fit every candidate,
//! select the bandwidth, evaluate curves and comparison residuals. Fit
//! failures are recorded per replication and excluded from the summaries.
//! Output is identical for any worker count.
StudyResult run_study(const Scenario& scenario, std::size_t n, std::size_t reps, std::uint64_t seed,
                      const MethodSet& methods, const StudyOptions& options = {});

//! Linear-interpolation sample quantile (type 7) of a non-empty sample.
double sample_quantile(std::vector<double> values, double q);
double sample_median(std::vector<double> values);
double sample_variance(const std::vector<double>& values);

struct VarianceRow
{
  std::size_t n = 0;
  double bandwidth = 0.0;
  double variance = 0.0;
  double mean = 0.0;
  std::size_t count = 0; //!< replications with U-hat(s) defined
};

//! Empirical Var[U-hat(s)] across seeds at each n, with bandwidth
//! c * n^{-1/5} and the true model fitted to each dataset.
std::vector<VarianceRow> variance_probe(const Scenario& scenario, double s,
                                        const std::vector<std::size_t>& n_list, std::size_t seeds,
                                        std::uint64_t master_seed, double bandwidth_constant,
                                        KernelKind kernel = KernelKind::Epanechnikov,
                                        int workers = 1);

} // namespace discres
