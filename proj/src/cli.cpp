#include "discres/cli.hpp"

#include "discres/error.hpp"
#include "discres/residuals.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace discres {

namespace {

std::string
trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string>
split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    out.push_back(trim(item));
  if (!s.empty() && s.back() == sep)
    out.push_back("");
  return out;
}

std::string
fixed3(std::optional<double> v)
{
  if (!v)
    return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string
pad(const std::string& s, std::size_t width, bool right = false)
{
  if (s.size() >= width)
    return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

std::string
dump(const Json& j)
{
  return j.dump(2) + "\n";
}

void
write_or_print(const std::string& path, const std::string& content, std::ostream& out)
{
  if (path.empty())
    out << content;
  else
    write_text_file(path, content);
}

std::string
resolve_outcome(const RunConfig& config, const CsvTable& table)
{
  if (!config.outcome.empty())
    return config.outcome;
  if (table.header.empty())
    throw FormatError("missing header row", 1);
  return table.header.front();
}

struct LoadedModel
{
  FittedModel fitted;
  std::vector<std::string> columns;
  std::string outcome;
};

LoadedModel
load_model(const std::string& path)
{
  const Json j = read_json_file(path);
  LoadedModel m;
  try {
    m.fitted = fitted_from_json(j.contains("fit") ? j.at("fit") : j, m.columns);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (m.columns.empty() || m.columns.front() != kInterceptName)
    throw FormatError(path + ": first design column must be the intercept");
  if (j.contains("config") && j.at("config").contains("outcome"))
    m.outcome = j.at("config").at("outcome").get<std::string>();
  return m;
}

Dataset
dataset_for(const LoadedModel& model, const CsvTable& table, const RunConfig& config)
{
  std::string outcome = config.outcome.empty() ? model.outcome : config.outcome;
  if (outcome.empty())
    outcome = table.header.front();
  const std::vector<std::string> covariates(model.columns.begin() + 1, model.columns.end());
  Dataset data = make_dataset(table, outcome, covariates);
  try {
    validate(model.fitted.spec, data);
  } catch (const Error& e) {
    throw FormatError(std::string("fitted model does not match the dataset: ") + e.what());
  }
  return data;
}

void
warn_discreteness(const Dataset& data, std::ostream& err)
{
  if (!has_continuous_covariate(data))
    err << "warning: no continuous covariate; the surrogate curve is only informative "
           "with at least one\n";
}

std::vector<ResidualKind>
parse_residual_kinds(const std::string& list)
{
  std::vector<ResidualKind> out;
  if (list.empty())
    return out;
  for (const auto& item : split(list, ',')) {
    if (item == "cox-snell")
      out.push_back(ResidualKind::CoxSnell);
    else if (item == "pearson")
      out.push_back(ResidualKind::Pearson);
    else if (item == "deviance")
      out.push_back(ResidualKind::Deviance);
    else if (item == "quantile")
      out.push_back(ResidualKind::RandomizedQuantile);
    else if (item == "all")
      out = { ResidualKind::CoxSnell, ResidualKind::Pearson, ResidualKind::Deviance,
              ResidualKind::RandomizedQuantile };
    else
      throw UsageError("unknown residual kind '" + item +
                       "' (expected cox-snell, pearson, deviance, quantile, all)");
  }
  return out;
}

Json
diagnostic_json(const Diagnostic& d, const DiagnosticOptions& options)
{
  Json j;
  j["bandwidth"] = d.curve.bandwidth;
  j["bandwidth_selected"] = d.selection.has_value();
  if (d.selection) {
    Json mesh = Json::array();
    for (std::size_t k = 0; k < d.selection->mesh.size(); ++k)
      mesh.push_back(Json{ { "bandwidth", d.selection->mesh[k] },
                           { "objective", d.selection->objective[k] } });
    j["mesh"] = mesh;
  }
  j["l2_range"] = Json::array({ options.l2_lo, options.l2_hi });
  j["l2"] = d.l2 ? Json(*d.l2) : Json(nullptr);
  j["l2_x1000"] = d.l2 ? Json(*d.l2 * 1000.0) : Json(nullptr);
  std::size_t low = 0, undefined = 0;
  for (const auto& p : d.curve.points) {
    low += p.low_information() ? 1 : 0;
    undefined += p.defined() ? 0 : 1;
  }
  j["low_information_points"] = low;
  j["undefined_points"] = undefined;
  j["curve"] = curve_to_json(d.curve);
  return j;
}

std::uint64_t
env_seed()
{
  const char* v = std::getenv("DISCRES_SEED");
  if (!v || !*v)
    return 1;
  char* end = nullptr;
  const auto seed = std::strtoull(v, &end, 10);
  if (*end != '\0')
    throw UsageError(std::string("DISCRES_SEED is not an unsigned integer: '") + v + "'");
  return seed;
}

} // namespace

Json
RunConfig::to_json() const
{
  Json j;
  j["command"] = command;
  j["inputs"] = inputs;
  j["family"] = family;
  j["link"] = link;
  j["formula"] = formula;
  j["outcome"] = outcome;
  j["kernel"] = kernel;
  j["bandwidth"] = bandwidth ? Json(*bandwidth) : Json(nullptr);
  j["s_grid"] = Json::array({ s_lo, s_hi, s_count });
  j["s_range"] = Json::array({ l2_lo, l2_hi });
  j["mesh_size"] = mesh_size;
  j["residuals"] = residuals;
  j["scenario"] = scenario;
  j["scenario_file"] = scenario_file;
  j["n"] = n;
  j["reps"] = reps;
  j["seed"] = seed;
  j["methods"] = methods;
  j["sup_range"] = Json::array({ sup_lo, sup_hi });
  return j;
}

RunConfig
RunConfig::from_json(const Json& j)
{
  try {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.inputs = j.at("inputs").get<std::vector<std::string>>();
    c.family = j.at("family").get<std::string>();
    c.link = j.at("link").get<std::string>();
    c.formula = j.at("formula").get<std::string>();
    c.outcome = j.at("outcome").get<std::string>();
    c.kernel = j.at("kernel").get<std::string>();
    if (!j.at("bandwidth").is_null())
      c.bandwidth = j.at("bandwidth").get<double>();
    c.s_lo = j.at("s_grid").at(0).get<double>();
    c.s_hi = j.at("s_grid").at(1).get<double>();
    c.s_count = j.at("s_grid").at(2).get<std::size_t>();
    c.l2_lo = j.at("s_range").at(0).get<double>();
    c.l2_hi = j.at("s_range").at(1).get<double>();
    c.mesh_size = j.at("mesh_size").get<std::size_t>();
    c.residuals = j.at("residuals").get<std::string>();
    c.scenario = j.at("scenario").get<std::string>();
    c.scenario_file = j.at("scenario_file").get<std::string>();
    c.n = j.at("n").get<std::size_t>();
    c.reps = j.at("reps").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.methods = j.at("methods").get<std::string>();
    c.sup_lo = j.at("sup_range").at(0).get<double>();
    c.sup_hi = j.at("sup_range").at(1).get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid run configuration: ") + e.what());
  }
}

DiagnosticOptions
RunConfig::diagnostic_options() const
{
  if (!(s_lo > 0.0 && s_hi < 1.0 && s_lo < s_hi) || s_count < 2)
    throw UsageError("--s-grid needs 0 < lo < hi < 1 and count >= 2");
  if (!(l2_lo < l2_hi))
    throw UsageError("--s-range needs lo < hi");
  if (bandwidth && !(*bandwidth > 0.0))
    throw UsageError("--bandwidth must be positive");
  if (mesh_size < 1)
    throw UsageError("bandwidth mesh needs at least one value");
  DiagnosticOptions o;
  o.kernel = parse_kernel(kernel);
  o.s_grid = linspace(s_lo, s_hi, s_count);
  o.bandwidth = bandwidth;
  o.mesh_size = mesh_size;
  o.l2_lo = l2_lo;
  o.l2_hi = l2_hi;
  o.workers = workers;
  return o;
}

std::vector<std::string>
Formula::columns() const
{
  std::vector<std::string> out;
  for (const auto* block : { &count, &zero, &one })
    for (const auto& name : *block)
      if (std::find(out.begin(), out.end(), name) == out.end())
        out.push_back(name);
  return out;
}

Formula
parse_formula(const std::string& text)
{
  Formula f;
  const auto segments = split(text, '|');
  for (std::size_t i = 0; i < segments.size(); ++i) {
    std::string label = "count";
    std::string rhs = segments[i];
    const auto colon = rhs.find(':');
    if (colon != std::string::npos) {
      label = trim(rhs.substr(0, colon));
      rhs = rhs.substr(colon + 1);
    } else if (i > 0) {
      throw UsageError("formula segment " + std::to_string(i + 1) +
                       " needs a block label (count:, zero: or one:)");
    }
    std::vector<std::string>* block = nullptr;
    if (label == "count")
      block = &f.count;
    else if (label == "zero")
      block = &f.zero, f.has_zero = true;
    else if (label == "one")
      block = &f.one, f.has_one = true;
    else
      throw UsageError("unknown formula block '" + label + "' (expected count, zero, one)");
    if (trim(rhs).empty())
      continue;
    for (const auto& term : split(rhs, '+')) {
      if (term.empty())
        throw UsageError("empty term in formula '" + text + "'");
      if (term == "1")
        continue;
      if (std::find(block->begin(), block->end(), term) == block->end())
        block->push_back(term);
    }
  }
  return f;
}

ModelSpec
build_spec(const Formula& formula, FamilyKind family, Link link)
{
  const auto cols = formula.columns();
  auto index_of = [&](const std::string& name) {
    return static_cast<Eigen::Index>(std::find(cols.begin(), cols.end(), name) - cols.begin()) + 1;
  };
  ModelSpec spec;
  spec.family = Family{ family, link };
  spec.count_columns.push_back(0);
  for (const auto& n : formula.count)
    spec.count_columns.push_back(index_of(n));
  const bool zero = family == FamilyKind::ZIP || family == FamilyKind::ZOIP;
  const bool one = family == FamilyKind::ZOIP;
  if (formula.has_zero && !zero)
    throw UsageError("a zero block needs family zip or zoip");
  if (formula.has_one && !one)
    throw UsageError("a one block needs family zoip");
  if (zero) {
    spec.zero_columns.push_back(0);
    for (const auto& n : formula.zero)
      spec.zero_columns.push_back(index_of(n));
  }
  if (one) {
    spec.one_columns.push_back(0);
    for (const auto& n : formula.one)
      spec.one_columns.push_back(index_of(n));
  }
  return spec;
}

std::string
display_name(FamilyKind kind)
{
  switch (kind) {
    case FamilyKind::Poisson:
      return "Poisson";
    case FamilyKind::NegativeBinomial:
      return "NB";
    case FamilyKind::Bernoulli:
      return "Bernoulli";
    case FamilyKind::ZIP:
      return "Zero-Inflated Poisson";
    case FamilyKind::ZOIP:
      return "Zero-One-Inflated Poisson";
  }
  return "unknown";
}

std::string
l2_table(const std::vector<std::string>& labels, const std::vector<std::optional<double>>& l2,
         double lo, double hi)
{
  std::ostringstream out;
  char range[96];
  std::snprintf(range, sizeof range, "L2 distance from the diagonal over [%g, %g] (x1000)\n", lo, hi);
  out << range;
  std::vector<std::string> cells;
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    cells.push_back(fixed3(l2[k] ? std::optional<double>(*l2[k] * 1000.0) : std::nullopt));
    widths.push_back(std::max(labels[k].size(), cells.back().size()));
  }
  for (std::size_t k = 0; k < labels.size(); ++k)
    out << (k ? "  " : "") << pad(labels[k], widths[k], true);
  out << '\n';
  for (std::size_t k = 0; k < labels.size(); ++k)
    out << (k ? "  " : "") << pad(cells[k], widths[k], true);
  out << '\n';
  return out.str();
}

std::string
coefficient_table(const FittedModel& fitted, const std::vector<std::string>& columns)
{
  const char* blocks[3] = { "Count", "Zero", "One" };
  const std::vector<Eigen::Index>* cols[3] = { &fitted.spec.count_columns,
                                               &fitted.spec.zero_columns,
                                               &fitted.spec.one_columns };
  const Eigen::VectorXd* coef[3] = { &fitted.coefficients.count, &fitted.coefficients.zero,
                                     &fitted.coefficients.one };
  const Eigen::VectorXd* se[3] = { &fitted.std_errors.count, &fitted.std_errors.zero,
                                   &fitted.std_errors.one };
  std::size_t name_width = 13;
  for (const auto& c : columns)
    name_width = std::max(name_width, c.size());
  std::ostringstream out;
  out << pad("", 6) << pad("Variable Name", name_width) << pad("Coef.", 10, true)
      << pad("s.e.", 10, true) << '\n';
  bool first = true;
  for (int b = 0; b < 3; ++b) {
    if (cols[b]->empty())
      continue;
    if (!first)
      out << std::string(6 + name_width + 20, '-') << '\n';
    first = false;
    for (std::size_t k = 0; k < cols[b]->size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      const double s = i < se[b]->size() ? (*se[b])(i) : std::nan("");
      out << pad(k == 0 ? blocks[b] : "", 6)
          << pad(columns.at(static_cast<std::size_t>((*cols[b])[k])), name_width)
          << pad(fixed3((*coef[b])(i)), 10, true)
          << pad(std::isfinite(s) ? fixed3(s) : "NA", 10, true) << '\n';
    }
  }
  if (fitted.spec.family.kind == FamilyKind::NegativeBinomial) {
    out << "NB size " << fixed3(fitted.coefficients.size);
    if (std::isfinite(fitted.std_errors.size))
      out << " (s.e. " << fixed3(fitted.std_errors.size) << ")";
    out << '\n';
  }
  char tail[128];
  std::snprintf(tail, sizeof tail, "log-likelihood %.3f, %s after %d iterations\n", fitted.loglik,
                fitted.converged ? "converged" : "not converged", fitted.iterations);
  out << tail;
  return out.str();
}

Json
artifact(const RunConfig& config, const char* kind, Json payload)
{
  Json j;
  j["discres_version"] = kVersion;
  j["artifact"] = kind;
  j["config"] = config.to_json();
  for (auto it = payload.begin(); it != payload.end(); ++it)
    j[it.key()] = it.value();
  return j;
}

Json
cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  if (config.inputs.size() != 1)
    throw UsageError("fit needs exactly one CSV path");
  const auto table = read_csv_file(config.inputs[0]);
  const auto outcome = resolve_outcome(config, table);
  const FamilyKind kind = parse_family(config.family);
  const Link link = config.link.empty() ? default_link(kind) : parse_link(config.link);

  Formula formula;
  if (config.formula.empty()) {
    for (const auto& h : table.header)
      if (h != outcome)
        formula.count.push_back(h);
  } else {
    formula = parse_formula(config.formula);
  }
  const auto spec = build_spec(formula, kind, link);
  const Dataset data = make_dataset(table, outcome, formula.columns());
  warn_discreteness(data, err);

  const auto fitted = fit(spec, data);
  out << coefficient_table(fitted, data.column_names);
  Json payload;
  payload["fit"] = fitted_to_json(fitted, data.column_names);
  return artifact(config, "fit", payload);
}

Json
cmd_diagnose(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  if (config.inputs.size() != 2)
    throw UsageError("diagnose needs a fitted-model JSON and a CSV path");
  const auto model = load_model(config.inputs[0]);
  const auto table = read_csv_file(config.inputs[1]);
  const Dataset data = dataset_for(model, table, config);
  warn_discreteness(data, err);

  const auto options = config.diagnostic_options();
  const auto kinds = parse_residual_kinds(config.residuals);
  const auto d = diagnose(model.fitted, data, options);

  Json payload;
  payload["model"] = display_name(model.fitted.spec.family.kind);
  payload["diagnostic"] = diagnostic_json(d, options);

  Json residuals = Json::object();
  Rng rng = stream_rng(config.seed, 0);
  for (const auto kind : kinds) {
    ResidualVector r;
    switch (kind) {
      case ResidualKind::CoxSnell:
        r = cox_snell(model.fitted, data);
        break;
      case ResidualKind::Pearson:
        r = pearson(model.fitted, data);
        break;
      case ResidualKind::Deviance:
        r = deviance(model.fitted, data);
        break;
      case ResidualKind::RandomizedQuantile:
        r = randomized_quantile(model.fitted, data, rng);
        break;
    }
    const auto pp = pp_curve(r);
    Json rj;
    rj["ks_distance"] = ks_distance(r);
    rj["theoretical"] = std::vector<double>(pp.theoretical.data(),
                                            pp.theoretical.data() + pp.theoretical.size());
    rj["empirical"] = std::vector<double>(pp.empirical.data(), pp.empirical.data() + pp.empirical.size());
    residuals[std::string(to_string(kind))] = rj;
    if (!config.out.empty())
      write_text_file(config.out + ".pp-" + std::string(to_string(kind)) + ".csv", pp_curve_to_csv(pp));
  }
  if (!kinds.empty())
    payload["residuals"] = residuals;

  char line[128];
  std::snprintf(line, sizeof line, "bandwidth %.6g (%s), kernel %s\n", d.curve.bandwidth,
                d.selection ? "selected" : "given", std::string(to_string(options.kernel)).c_str());
  out << line;
  out << l2_table({ display_name(model.fitted.spec.family.kind) }, { d.l2 }, options.l2_lo, options.l2_hi);
  for (auto it = residuals.begin(); it != residuals.end(); ++it)
    out << "KS distance (" << it.key() << " P-P): " << fixed3(it.value().at("ks_distance").get<double>())
        << '\n';

  if (!config.out.empty())
    write_text_file(config.out + ".csv", curve_to_csv(d.curve));
  return artifact(config, "diagnose", payload);
}

Json
cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  if (config.inputs.size() < 2)
    throw UsageError("compare needs one or more fitted-model JSON files followed by a CSV path");
  const auto table = read_csv_file(config.inputs.back());
  const auto options = config.diagnostic_options();

  std::vector<std::string> labels;
  std::vector<std::optional<double>> l2;
  Json models = Json::array();
  bool warned = false;
  for (std::size_t m = 0; m + 1 < config.inputs.size(); ++m) {
    const auto model = load_model(config.inputs[m]);
    const Dataset data = dataset_for(model, table, config);
    if (!warned) {
      warn_discreteness(data, err);
      warned = true;
    }
    const auto d = diagnose(model.fitted, data, options);
    labels.push_back(display_name(model.fitted.spec.family.kind));
    l2.push_back(d.l2);
    Json mj;
    mj["label"] = labels.back();
    mj["source"] = config.inputs[m];
    mj["diagnostic"] = diagnostic_json(d, options);
    models.push_back(mj);
    if (!config.out.empty())
      write_text_file(config.out + ".curve-" + std::to_string(m + 1) + ".csv", curve_to_csv(d.curve));
  }
  out << l2_table(labels, l2, options.l2_lo, options.l2_hi);

  Json tab = Json::array();
  for (std::size_t k = 0; k < labels.size(); ++k)
    tab.push_back(Json{ { "label", labels[k] },
                        { "l2_x1000", l2[k] ? Json(*l2[k] * 1000.0) : Json(nullptr) } });
  Json payload;
  payload["table"] = tab;
  payload["models"] = models;
  return artifact(config, "compare", payload);
}

Json
cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream&)
{
  Scenario scenario;
  if (!config.scenario_file.empty()) {
    scenario = scenario_from_json(read_json_file(config.scenario_file));
    if (scenario.provenance == "registered")
      scenario.provenance = "user-supplied";
    scenario.provenance += " (" + config.scenario_file + ")";
  } else if (!config.scenario.empty()) {
    scenario = find_scenario(config.scenario);
  } else {
    throw UsageError("simulate needs a scenario name or --scenario-file");
  }
  if (config.n < 1)
    throw UsageError("--n must be at least 1");
  if (config.reps < 1)
    throw UsageError("--reps must be at least 1");

  StudyOptions options;
  options.diagnostic = config.diagnostic_options();
  options.diagnostic.workers = 1;
  options.sup_lo = config.sup_lo;
  options.sup_hi = config.sup_hi;
  options.workers = config.workers;
  const auto methods = MethodSet::parse(config.methods);
  const auto result = run_study(scenario, config.n, config.reps, config.seed, methods, options);

  std::size_t successes = 0;
  char line[256];
  std::snprintf(line, sizeof line, "scenario %s, n = %zu, reps = %zu, seed = %llu\n",
                scenario.name.c_str(), config.n, config.reps,
                static_cast<unsigned long long>(config.seed));
  out << line;
  for (const auto& s : result.summaries) {
    successes += s.successes;
    out << "  " << s.label << ": " << s.successes << " fitted, " << s.failures << " failed";
    if (methods.surrogate)
      out << "; median sup-deviation " << fixed3(s.median_sup_deviation) << ", median L2 x1000 "
          << fixed3(s.median_l2 ? std::optional<double>(*s.median_l2 * 1000.0) : std::nullopt)
          << ", envelope coverage " << fixed3(s.envelope.diagonal_coverage);
    out << '\n';
  }
  if (!config.dump_curves.empty())
    write_text_file(config.dump_curves, study_curves_csv(result, scenario));
  if (successes == 0)
    throw DegenerateFitError("every fit failed in every replication");
  return artifact(config, "simulate", study_to_json(result, scenario));
}

void
execute(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  Json result;
  if (config.command == "fit") {
    std::ostringstream table;
    result = cmd_fit(config, table, err);
    if (config.out.empty()) {
      out << dump(result);
      return;
    }
    out << table.str();
  } else if (config.command == "diagnose") {
    result = cmd_diagnose(config, out, err);
    if (!config.out.empty())
      write_text_file(config.out + ".json", dump(result));
    return;
  } else if (config.command == "compare") {
    result = cmd_compare(config, out, err);
    if (!config.out.empty())
      write_text_file(config.out + ".json", dump(result));
    return;
  } else if (config.command == "simulate") {
    result = cmd_simulate(config, out, err);
  } else {
    throw UsageError("unknown command '" + config.command + "'");
  }
  if (!config.out.empty())
    write_or_print(config.out, dump(result), out);
}

int
run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Surrogate empirical residual diagnostics for discrete-outcome regression" };
  app.name("discres");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig cfg;
  std::vector<double> s_grid;
  std::vector<double> s_range;
  std::vector<double> sup_range;
  double bandwidth = 0.0;
  std::uint64_t seed = 0;
  std::string rerun_path;
  bool list = false;

  auto add_diag = [&](CLI::App* sub) {
    sub->add_option("--kernel", cfg.kernel, "epanechnikov or quartic")->capture_default_str();
    sub->add_option("--bandwidth", bandwidth, "fixed bandwidth (selected from the mesh otherwise)");
    sub->add_option("--s-grid", s_grid, "lo hi count")->expected(3);
    sub->add_option("--s-range", s_range, "L2 integration range lo hi")->expected(2);
    sub->add_option("--mesh-size", cfg.mesh_size, "bandwidth mesh size")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "worker threads")->capture_default_str();
    sub->add_option("--outcome", cfg.outcome, "outcome column (default: from the fit)");
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit a regression model to a CSV file");
  fit_cmd->add_option("csv", cfg.inputs, "data file")->required();
  fit_cmd->add_option("--family", cfg.family, "poisson, nb, bernoulli, zip, zoip")->capture_default_str();
  fit_cmd->add_option("--link", cfg.link, "log, logit, sqrt, identity (default: canonical)");
  fit_cmd->add_option("--formula", cfg.formula, "e.g. \"count: a + b | zero: a | one: a\"");
  fit_cmd->add_option("--outcome", cfg.outcome, "outcome column (default: first column)");
  fit_cmd->add_option("--out", cfg.out, "fitted-model JSON path (default: stdout)");

  auto* diag_cmd = app.add_subcommand("diagnose", "surrogate curve of one fitted model");
  diag_cmd->add_option("inputs", cfg.inputs, "fitted-model JSON, data CSV")->required()->expected(2);
  add_diag(diag_cmd);
  diag_cmd->add_option("--residuals", cfg.residuals,
                       "comparison P-P curves: cox-snell,pearson,deviance,quantile,all");
  diag_cmd->add_option("--seed", seed, "seed for randomized quantile residuals");
  diag_cmd->add_option("--out", cfg.out, "output prefix (PREFIX.json, PREFIX.csv)");

  auto* cmp_cmd = app.add_subcommand("compare", "L2 table over several fitted models");
  cmp_cmd->add_option("inputs", cfg.inputs, "fitted-model JSON files, then the data CSV")
    ->required()
    ->expected(2, -1);
  add_diag(cmp_cmd);
  cmp_cmd->add_option("--out", cfg.out, "output prefix");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study of a scenario");
  sim_cmd->add_option("scenario", cfg.scenario, "registered scenario name");
  sim_cmd->add_option("--scenario-file", cfg.scenario_file, "scenario JSON");
  sim_cmd->add_flag("--list", list, "list registered scenarios");
  sim_cmd->add_option("--n", cfg.n, "sample size")->capture_default_str();
  sim_cmd->add_option("--reps", cfg.reps, "replications")->capture_default_str();
  sim_cmd->add_option("--seed", seed, "master seed (default: DISCRES_SEED, else 1)");
  sim_cmd->add_option("--methods", cfg.methods, "surrogate,cox-snell,pearson,deviance,quantile")
    ->capture_default_str();
  sim_cmd->add_option("--sup-range", sup_range, "sup-deviation range lo hi")->expected(2);
  sim_cmd->add_option("--dump-curves", cfg.dump_curves, "per-replication curve CSV");
  sim_cmd->add_option("--out", cfg.out, "StudyResult JSON path");
  add_diag(sim_cmd);

  auto* rerun_cmd = app.add_subcommand("rerun", "repeat the run recorded in an artifact");
  rerun_cmd->add_option("artifact", rerun_path, "JSON artifact")->required();
  rerun_cmd->add_option("--out", cfg.out, "output path or prefix");
  rerun_cmd->add_option("--workers", cfg.workers, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (chosen == rerun_cmd) {
      const Json a = read_json_file(rerun_path);
      if (!a.contains("config"))
        throw FormatError(rerun_path + ": no embedded run configuration");
      RunConfig again = RunConfig::from_json(a.at("config"));
      again.out = cfg.out;
      again.workers = cfg.workers;
      cfg = again;
    } else {
      cfg.command = chosen->get_name();
      if (chosen == sim_cmd && list) {
        for (const auto& s : registered_scenarios())
          out << s.name << "  " << s.description << '\n';
        return kExitSuccess;
      }
      if (chosen->get_option_no_throw("--bandwidth") && chosen->count("--bandwidth"))
        cfg.bandwidth = bandwidth;
      if (!s_grid.empty()) {
        if (s_grid[2] < 2 || s_grid[2] != std::floor(s_grid[2]))
          throw UsageError("--s-grid count must be an integer >= 2");
        cfg.s_lo = s_grid[0];
        cfg.s_hi = s_grid[1];
        cfg.s_count = static_cast<std::size_t>(s_grid[2]);
      }
      if (!s_range.empty()) {
        cfg.l2_lo = s_range[0];
        cfg.l2_hi = s_range[1];
      }
      if (!sup_range.empty()) {
        cfg.sup_lo = sup_range[0];
        cfg.sup_hi = sup_range[1];
      }
      cfg.seed = chosen->get_option_no_throw("--seed") && chosen->count("--seed") ? seed : env_seed();
      if (cfg.workers < 1)
        throw UsageError("--workers must be at least 1");
    }
    execute(cfg, out, err);
    return kExitSuccess;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const SeparationError& e) {
    err << "convergence error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const DegenerateFitError& e) {
    err << "fit error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const SelectionError& e) {
    err << "bandwidth selection error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int
run(int argc, char** argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

} // namespace discres
