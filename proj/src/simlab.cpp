#include "discres/simlab.hpp"

#include "discres/error.hpp"
#include "discres/parallel.hpp"
#include "discres/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace discres {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd
vec(std::initializer_list<double> values)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values)
    v(i++) = x;
  return v;
}

ModelSpec
spec(FamilyKind kind, Link link, std::vector<Eigen::Index> count,
     std::vector<Eigen::Index> zero = {}, double size = kNaN, bool fixed_size = false)
{
  ModelSpec s;
  s.family = Family{ kind, link, size };
  s.count_columns = std::move(count);
  s.zero_columns = std::move(zero);
  s.fixed_size = fixed_size;
  return s;
}

Coefficients
truth(Eigen::VectorXd count, Eigen::VectorXd zero = {}, double size = kNaN)
{
  Coefficients c;
  c.count = std::move(count);
  c.zero = std::move(zero);
  c.one = Eigen::VectorXd();
  c.size = size;
  return c;
}

Scenario
poisson_mean_scenario(const std::string& name, const std::string& label, double b0)
{
  Scenario s;
  s.name = name;
  s.description = "Poisson GLM, log link, " + label + " mean: beta = (" +
                  std::to_string(static_cast<int>(b0)) + ", 2, 1); x1 ~ N(0,1), x2 ~ Bernoulli(0.7)";
  s.generator = spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 });
  s.truth = truth(vec({ b0, 2.0, 1.0 }));
  s.fits = { { "poisson", s.generator, true } };
  return s;
}

Scenario
missing_covariate_scenario(const std::string& name, double b0)
{
  Scenario s;
  s.name = name;
  s.description = "Poisson GLM, log link, beta = (" + std::to_string(static_cast<int>(b0)) +
                  ", 2, 1.5); x1, x2 ~ N(0,1); misspecified fit omits x2";
  s.generator = spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 });
  s.truth = truth(vec({ b0, 2.0, 1.5 }));
  s.covariates = CovariateLaw::TwoNormals;
  s.fits = { { "poisson", s.generator, true },
             { "poisson-omit-x2", spec(FamilyKind::Poisson, Link::Log, { 0, 1 }), false } };
  return s;
}

std::vector<Scenario>
build_registry()
{
  std::vector<Scenario> out;
  out.push_back(poisson_mean_scenario("poisson-small", "small", -2.0));
  out.push_back(poisson_mean_scenario("poisson-medium", "medium", 0.0));
  out.push_back(poisson_mean_scenario("poisson-large", "large", 5.0));

  {
    Scenario s;
    s.name = "binary";
    s.description = "logistic regression, beta = (-2, 2, 1); x1 ~ N(0,1), x2 ~ Bernoulli(0.7)";
    s.generator = spec(FamilyKind::Bernoulli, Link::Logit, { 0, 1, 2 });
    s.truth = truth(vec({ -2.0, 2.0, 1.0 }));
    s.fits = { { "logistic", s.generator, true } };
    out.push_back(s);
  }

  out.push_back(missing_covariate_scenario("poisson-missing-covariate", -2.0));
  out.push_back(missing_covariate_scenario("poisson-missing-covariate-medium", 0.0));

  {
    Scenario s;
    s.name = "nb-overdispersion";
    s.description = "negative binomial, size 2, log link, beta = (-2, 2, 1); x1 ~ N(0,1), "
                    "x2 ~ Bernoulli(0.7); misspecified fit is a Poisson GLM";
    s.generator = spec(FamilyKind::NegativeBinomial, Link::Log, { 0, 1, 2 }, {}, 2.0, true);
    s.truth = truth(vec({ -2.0, 2.0, 1.0 }), {}, 2.0);
    s.fits = { { "nb", spec(FamilyKind::NegativeBinomial, Link::Log, { 0, 1, 2 }), true },
               { "poisson", spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), false } };
    out.push_back(s);
  }

  {
    Scenario s;
    s.name = "zip-medium";
    s.description = "zero-inflated Poisson, logit(p0) = -2 + 2 x1, log(lambda) = 0 + 2 x1 + x2; "
                    "x1 ~ N(0,1), x2 ~ Bernoulli(0.7); misspecified fit is a Poisson GLM";
    s.generator = spec(FamilyKind::ZIP, Link::Log, { 0, 1, 2 }, { 0, 1 });
    s.truth = truth(vec({ 0.0, 2.0, 1.0 }), vec({ -2.0, 2.0 }));
    s.fits = { { "zip", s.generator, true },
               { "poisson", spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), false } };
    out.push_back(s);
  }

  {
    Scenario s;
    s.name = "poisson-wrong-link";
    s.description = "Poisson, square-root link, lambda = (0 + x1 + x2)^2; x1 ~ N(0,1), "
                    "x2 ~ Bernoulli(0.7); misspecified fit uses the log link";
    s.generator = spec(FamilyKind::Poisson, Link::Sqrt, { 0, 1, 2 });
    s.truth = truth(vec({ 0.0, 1.0, 1.0 }));
    s.fits = { { "poisson-sqrt", s.generator, true },
               { "poisson-log", spec(FamilyKind::Poisson, Link::Log, { 0, 1, 2 }), false } };
    out.push_back(s);
  }
  return out;
}

std::optional<double>
median_of(const std::vector<double>& v)
{
  if (v.empty())
    return std::nullopt;
  return sample_median(v);
}

std::optional<double>
mean_of(const std::vector<double>& v)
{
  if (v.empty())
    return std::nullopt;
  double s = 0.0;
  for (const double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

FitReplication
run_candidate(const FitCandidate& candidate, const Dataset& data, const MethodSet& methods,
              const StudyOptions& options, Rng& rng)
{
  FitReplication r;
  try {
    const auto fitted = fit(candidate.spec, data, options.fit);
    r.coefficients = fitted.coefficients;
    r.std_errors = fitted.std_errors;
    if (methods.surrogate) {
      auto diag_options = options.diagnostic;
      diag_options.workers = 1;
      const auto d = diagnose(fitted, data, diag_options);
      r.bandwidth = d.curve.bandwidth;
      r.l2 = d.l2;
      r.sup_deviation = sup_deviation(d.curve, options.sup_lo, options.sup_hi);
      r.curve.reserve(d.curve.points.size());
      for (const auto& p : d.curve.points)
        r.curve.push_back(p.u);
    }
    if (methods.cox_snell)
      r.ks_cox_snell = ks_distance(cox_snell(fitted, data));
    if (methods.pearson)
      r.ks_pearson = ks_distance(pearson(fitted, data));
    if (methods.deviance && !fitted.family().is_mixture())
      r.ks_deviance = ks_distance(deviance(fitted, data));
    if (methods.quantile)
      r.ks_quantile = ks_distance(randomized_quantile(fitted, data, rng));
    r.ok = true;
  } catch (const Error& e) {
    r = FitReplication{};
    r.error = e.what();
  }
  return r;
}

Envelope
build_envelope(const std::vector<double>& s_grid, const std::vector<const FitReplication*>& reps)
{
  Envelope env;
  env.s = s_grid;
  std::size_t covered = 0;
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    std::vector<double> values;
    for (const auto* r : reps)
      if (j < r->curve.size() && r->curve[j])
        values.push_back(*r->curve[j]);
    if (values.empty()) {
      env.lower.emplace_back();
      env.median.emplace_back();
      env.upper.emplace_back();
      continue;
    }
    const double lo = sample_quantile(values, 0.05);
    const double hi = sample_quantile(values, 0.95);
    env.lower.emplace_back(lo);
    env.median.emplace_back(sample_quantile(values, 0.5));
    env.upper.emplace_back(hi);
    if (lo <= s_grid[j] && s_grid[j] <= hi)
      ++covered;
  }
  if (!s_grid.empty())
    env.diagonal_coverage = static_cast<double>(covered) / static_cast<double>(s_grid.size());
  return env;
}

} // namespace

std::string_view
to_string(CovariateLaw law)
{
  return law == CovariateLaw::TwoNormals ? "two-normals" : "normal-bernoulli";
}

CovariateLaw
parse_covariate_law(std::string_view name)
{
  if (name == "two-normals")
    return CovariateLaw::TwoNormals;
  if (name == "normal-bernoulli")
    return CovariateLaw::NormalAndBernoulli;
  throw FormatError("unknown covariate law '" + std::string(name) +
                    "' (expected normal-bernoulli, two-normals)");
}

const FitCandidate&
Scenario::true_fit() const
{
  if (fits.empty())
    throw DomainError("scenario '" + name + "' has no fit candidates");
  for (const auto& f : fits)
    if (f.true_model)
      return f;
  return fits.front();
}

const std::vector<Scenario>&
registered_scenarios()
{
  static const std::vector<Scenario> registry = build_registry();
  return registry;
}

std::vector<std::string>
scenario_names()
{
  std::vector<std::string> names;
  for (const auto& s : registered_scenarios())
    names.push_back(s.name);
  return names;
}

const Scenario&
find_scenario(const std::string& name)
{
  for (const auto& s : registered_scenarios())
    if (s.name == name)
      return s;
  std::string list;
  for (const auto& n : scenario_names())
    list += (list.empty() ? "" : ", ") + n;
  throw UsageError("unknown scenario '" + name + "'; registered scenarios: " + list);
}

Dataset
generate(const Scenario& scenario, std::size_t n, Rng& rng)
{
  if (n == 0)
    throw DomainError("sample size must be at least 1");
  Dataset data;
  const auto rows = static_cast<Eigen::Index>(n);
  data.design.resize(rows, 3);
  data.outcomes.resize(rows);
  data.column_names = { "(Intercept)", "x1", "x2" };
  Family family = scenario.generator.family;
  if (family.kind == FamilyKind::NegativeBinomial)
    family.size = scenario.truth.size;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x1 = standard_normal(rng);
    const double x2 = scenario.covariates == CovariateLaw::TwoNormals
                        ? standard_normal(rng)
                        : (uniform01(rng) < scenario.bernoulli_probability ? 1.0 : 0.0);
    data.design(i, 0) = 1.0;
    data.design(i, 1) = x1;
    data.design(i, 2) = x2;
    const auto lp = linear_predictor(scenario.generator, scenario.truth, data.design.row(i));
    data.outcomes(i) = static_cast<int>(make_distribution(family, lp).sample(rng));
  }
  return data;
}

MethodSet
MethodSet::parse(const std::string& list)
{
  if (list.empty() || list == "all")
    return MethodSet{};
  MethodSet m{ false, false, false, false, false };
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "surrogate")
      m.surrogate = true;
    else if (item == "cox-snell")
      m.cox_snell = true;
    else if (item == "pearson")
      m.pearson = true;
    else if (item == "deviance")
      m.deviance = true;
    else if (item == "quantile")
      m.quantile = true;
    else
      throw UsageError("unknown method '" + item +
                       "' (expected surrogate, cox-snell, pearson, deviance, quantile)");
  }
  return m;
}

std::string
MethodSet::to_string() const
{
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on)
      out += (out.empty() ? "" : ",") + std::string(name);
  };
  add(surrogate, "surrogate");
  add(cox_snell, "cox-snell");
  add(pearson, "pearson");
  add(deviance, "deviance");
  add(quantile, "quantile");
  return out;
}

double
sample_quantile(std::vector<double> values, double q)
{
  if (values.empty())
    throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double
sample_median(std::vector<double> values)
{
  return sample_quantile(std::move(values), 0.5);
}

double
sample_variance(const std::vector<double>& values)
{
  if (values.size() < 2)
    return 0.0;
  double mean = 0.0;
  for (const double v : values)
    mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values)
    ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

StudyResult
run_study(const Scenario& scenario, std::size_t n, std::size_t reps, std::uint64_t seed,
          const MethodSet& methods, const StudyOptions& options)
{
  if (reps == 0)
    throw DomainError("at least one replication is required");
  StudyResult result;
  result.scenario = scenario.name;
  result.n = n;
  result.reps = reps;
  result.seed = seed;
  result.methods = methods;
  result.s_grid = options.diagnostic.s_grid;
  result.replications.resize(reps);

  parallel_for(reps, options.workers, [&](std::size_t r) {
    Rng rng = stream_rng(seed, r);
    const Dataset data = generate(scenario, n, rng);
    Replication rep;
    rep.index = r;
    for (const auto& candidate : scenario.fits)
      rep.fits.push_back(run_candidate(candidate, data, methods, options, rng));
    result.replications[r] = std::move(rep);
  });

  for (std::size_t f = 0; f < scenario.fits.size(); ++f) {
    FitSummary summary;
    summary.label = scenario.fits[f].label;
    std::vector<double> sup, l2, ks_cs, ks_p, ks_d, ks_q;
    std::vector<const FitReplication*> ok;
    for (const auto& rep : result.replications) {
      const auto& fr = rep.fits[f];
      if (!fr.ok) {
        ++summary.failures;
        continue;
      }
      ++summary.successes;
      ok.push_back(&fr);
      if (fr.sup_deviation)
        sup.push_back(*fr.sup_deviation);
      if (fr.l2)
        l2.push_back(*fr.l2);
      if (fr.ks_cox_snell)
        ks_cs.push_back(*fr.ks_cox_snell);
      if (fr.ks_pearson)
        ks_p.push_back(*fr.ks_pearson);
      if (fr.ks_deviance)
        ks_d.push_back(*fr.ks_deviance);
      if (fr.ks_quantile)
        ks_q.push_back(*fr.ks_quantile);
    }
    summary.median_sup_deviation = median_of(sup);
    summary.mean_sup_deviation = mean_of(sup);
    summary.median_l2 = median_of(l2);
    summary.mean_l2 = mean_of(l2);
    summary.median_ks_cox_snell = median_of(ks_cs);
    summary.median_ks_pearson = median_of(ks_p);
    summary.median_ks_deviance = median_of(ks_d);
    summary.median_ks_quantile = median_of(ks_q);
    if (methods.surrogate)
      summary.envelope = build_envelope(result.s_grid, ok);
    result.summaries.push_back(std::move(summary));
  }
  return result;
}

std::vector<VarianceRow>
variance_probe(const Scenario& scenario, double s, const std::vector<std::size_t>& n_list,
               std::size_t seeds, std::uint64_t master_seed, double bandwidth_constant,
               KernelKind kernel, int workers)
{
  if (!(s > 0.0 && s < 1.0))
    throw DomainError("s must lie in (0, 1)");
  if (!(bandwidth_constant > 0.0))
    throw DomainError("bandwidth constant must be positive");
  const auto& candidate = scenario.true_fit();
  std::vector<VarianceRow> table;
  for (const std::size_t n : n_list) {
    VarianceRow row;
    row.n = n;
    row.bandwidth = bandwidth_constant * std::pow(static_cast<double>(n), -0.2);
    std::vector<std::optional<double>> values(seeds);
    parallel_for(seeds, workers, [&](std::size_t r) {
      Rng rng = stream_rng(mix64(master_seed + n), r);
      const Dataset data = generate(scenario, n, rng);
      try {
        const auto fitted = fit(candidate.spec, data);
        const auto inputs = SurrogateInputs::from_fit(fitted, data);
        const auto u = u_hat(s, inputs, kernel, row.bandwidth);
        if (u.defined)
          values[r] = u.value;
      } catch (const Error&) {
      }
    });
    std::vector<double> defined;
    for (const auto& v : values)
      if (v)
        defined.push_back(*v);
    row.count = defined.size();
    row.variance = sample_variance(defined);
    row.mean = mean_of(defined).value_or(kNaN);
    table.push_back(row);
  }
  return table;
}

} // namespace discres
