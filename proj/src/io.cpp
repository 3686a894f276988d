#include "discres/io.hpp"

#include "discres/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace discres {

namespace {

std::string
trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string>
split_fields(const std::string& line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

bool
parse_double(const std::string& cell, double& value)
{
  if (cell.empty())
    return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+')
    ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

Json
vector_json(const Eigen::VectorXd& v)
{
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i)))
      a.push_back(v(i));
    else
      a.push_back(nullptr);
  }
  return a;
}

double
number_or_nan(const Json& j)
{
  if (j.is_null())
    return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number())
    throw FormatError("expected a number, got " + j.dump());
  return j.get<double>();
}

Eigen::VectorXd
vector_from_json(const Json& j)
{
  if (!j.is_array())
    throw FormatError("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number_or_nan(j[i]);
  return v;
}

const Json&
member(const Json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template<typename F>
auto
rethrow_as_format(F&& f)
{
  try {
    return f();
  } catch (const UsageError& e) {
    throw FormatError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(e.what());
  }
}

const char* const kBlockNames[3] = { "count", "zero", "one" };

std::vector<Eigen::Index>&
block_columns(ModelSpec& spec, int b)
{
  return b == 0 ? spec.count_columns : (b == 1 ? spec.zero_columns : spec.one_columns);
}

const std::vector<Eigen::Index>&
block_columns(const ModelSpec& spec, int b)
{
  return b == 0 ? spec.count_columns : (b == 1 ? spec.zero_columns : spec.one_columns);
}

Eigen::VectorXd&
block_values(Coefficients& c, int b)
{
  return b == 0 ? c.count : (b == 1 ? c.zero : c.one);
}

const Eigen::VectorXd&
block_values(const Coefficients& c, int b)
{
  return b == 0 ? c.count : (b == 1 ? c.zero : c.one);
}

Json
optional_json(const std::optional<double>& v)
{
  return v ? Json(*v) : Json(nullptr);
}

Json
spec_json(const ModelSpec& spec, const std::vector<std::string>& names)
{
  Json j;
  j["family"] = to_string(spec.family.kind);
  j["link"] = to_string(spec.family.link);
  if (spec.family.kind == FamilyKind::NegativeBinomial) {
    j["fixed_size"] = spec.fixed_size;
    if (spec.fixed_size)
      j["size"] = spec.family.size;
  }
  for (int b = 0; b < 3; ++b) {
    const auto& cols = block_columns(spec, b);
    if (b > 0 && cols.empty())
      continue;
    Json a = Json::array();
    for (const auto c : cols)
      a.push_back(names.at(static_cast<std::size_t>(c)));
    j[kBlockNames[b]] = a;
  }
  return j;
}

ModelSpec
spec_from_json(const Json& j, const std::vector<std::string>& names)
{
  ModelSpec spec;
  spec.family.kind = parse_family(member(j, "family").get<std::string>());
  spec.family.link = j.contains("link") ? parse_link(j.at("link").get<std::string>())
                                        : default_link(spec.family.kind);
  if (j.contains("fixed_size"))
    spec.fixed_size = j.at("fixed_size").get<bool>();
  if (j.contains("size"))
    spec.family.size = number_or_nan(j.at("size"));
  for (int b = 0; b < 3; ++b) {
    if (!j.contains(kBlockNames[b]))
      continue;
    for (const auto& name : j.at(kBlockNames[b])) {
      const auto s = name.get<std::string>();
      const auto it = std::find(names.begin(), names.end(), s);
      if (it == names.end())
        throw FormatError("unknown column '" + s + "' in " + kBlockNames[b] + " block");
      block_columns(spec, b).push_back(static_cast<Eigen::Index>(it - names.begin()));
    }
  }
  return spec;
}

Json
coefficients_json(const Coefficients& c, bool with_size)
{
  Json j;
  for (int b = 0; b < 3; ++b)
    if (block_values(c, b).size() > 0)
      j[kBlockNames[b]] = vector_json(block_values(c, b));
  if (with_size)
    j["size"] = std::isfinite(c.size) ? Json(c.size) : Json(nullptr);
  return j;
}

Coefficients
coefficients_from_json(const Json& j)
{
  Coefficients c;
  for (int b = 0; b < 3; ++b)
    if (j.contains(kBlockNames[b]))
      block_values(c, b) = vector_from_json(j.at(kBlockNames[b]));
  if (j.contains("size"))
    c.size = number_or_nan(j.at("size"));
  return c;
}

std::vector<std::string>
scenario_columns()
{
  return { kInterceptName, "x1", "x2" };
}

} // namespace

std::string
format_number(double x)
{
  if (std::isnan(x))
    return "NA";
  if (std::isinf(x))
    return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

Eigen::Index
CsvTable::column(const std::string& name) const
{
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return static_cast<Eigen::Index>(i);
  throw FormatError("column '" + name + "' not found in header", 1);
}

CsvTable
read_csv(std::istream& in)
{
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c].empty())
          throw FormatError("empty column name", lineno, c + 1);
        for (std::size_t d = 0; d < c; ++d)
          if (fields[d] == fields[c])
            throw FormatError("duplicate column name '" + fields[c] + "'", lineno, c + 1);
      }
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw FormatError("expected " + std::to_string(table.header.size()) + " fields, found " +
                          std::to_string(fields.size()),
                        lineno);
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (!parse_double(fields[c], row[c]) || !std::isfinite(row[c]))
        throw FormatError("non-numeric cell '" + fields[c] + "' in column '" + table.header[c] + "'",
                          lineno, c + 1);
    rows.push_back(std::move(row));
  }
  if (table.header.empty())
    throw FormatError("missing header row", 1);
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

CsvTable
read_csv_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "' for reading");
  try {
    return read_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Dataset
make_dataset(const CsvTable& table, const std::string& outcome,
             const std::vector<std::string>& columns)
{
  if (table.values.rows() == 0)
    throw FormatError("no data rows");
  const auto y_col = table.column(outcome);
  Dataset data;
  const auto n = table.values.rows();
  data.design.resize(n, static_cast<Eigen::Index>(columns.size()) + 1);
  data.design.col(0).setOnes();
  data.column_names.push_back(kInterceptName);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto j = table.column(columns[c]);
    data.design.col(static_cast<Eigen::Index>(c) + 1) = table.values.col(j);
    data.column_names.push_back(columns[c]);
  }
  data.outcomes.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = table.values(i, y_col);
    if (y < 0.0 || y != std::floor(y) || y > 2e9)
      throw FormatError("outcome '" + format_number(y) + "' is not a non-negative integer",
                        static_cast<std::size_t>(i) + 2, static_cast<std::size_t>(y_col) + 1);
    data.outcomes(i) = static_cast<int>(y);
  }
  return data;
}

std::string
read_text_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void
write_text_file(const std::string& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

Json
read_json_file(const std::string& path)
{
  const auto text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

Json
fitted_to_json(const FittedModel& fitted, const std::vector<std::string>& column_names)
{
  const bool nb = fitted.spec.family.kind == FamilyKind::NegativeBinomial;
  Json j;
  j["model"] = spec_json(fitted.spec, column_names);
  j["coefficients"] = coefficients_json(fitted.coefficients, nb);
  j["std_errors"] = coefficients_json(fitted.std_errors, nb);
  j["loglik"] = fitted.loglik;
  j["converged"] = fitted.converged;
  j["iterations"] = fitted.iterations;
  j["gradient_norm"] = fitted.gradient_norm;
  Json names = Json::array();
  for (const auto& n : column_names)
    names.push_back(n);
  j["columns"] = names;
  return j;
}

FittedModel
fitted_from_json(const Json& j, std::vector<std::string>& column_names)
{
  return rethrow_as_format([&] {
    column_names.clear();
    for (const auto& n : member(j, "columns"))
      column_names.push_back(n.get<std::string>());
    FittedModel f;
    f.spec = spec_from_json(member(j, "model"), column_names);
    f.coefficients = coefficients_from_json(member(j, "coefficients"));
    if (j.contains("std_errors"))
      f.std_errors = coefficients_from_json(j.at("std_errors"));
    f.loglik = number_or_nan(member(j, "loglik"));
    f.converged = j.value("converged", true);
    f.iterations = j.value("iterations", 0);
    f.gradient_norm = j.contains("gradient_norm") ? number_or_nan(j.at("gradient_norm")) : 0.0;
    if (f.coefficients.count.size() != static_cast<Eigen::Index>(f.spec.count_columns.size()) ||
        f.coefficients.zero.size() != static_cast<Eigen::Index>(f.spec.zero_columns.size()) ||
        f.coefficients.one.size() != static_cast<Eigen::Index>(f.spec.one_columns.size()))
      throw FormatError("coefficient count does not match the model blocks");
    return f;
  });
}

Json
curve_to_json(const SurrogateCurve& curve)
{
  Json j;
  j["kernel"] = to_string(curve.kernel);
  j["bandwidth"] = curve.bandwidth;
  Json points = Json::array();
  for (const auto& p : curve.points) {
    Json r;
    r["s"] = p.s;
    r["u"] = optional_json(p.u);
    r["effective_n"] = p.effective_n;
    r["defined"] = p.defined();
    points.push_back(r);
  }
  j["points"] = points;
  return j;
}

std::string
curve_to_csv(const SurrogateCurve& curve)
{
  std::string out = "s,u,effective_n,defined\n";
  for (const auto& p : curve.points) {
    out += format_number(p.s) + ',' + (p.u ? format_number(*p.u) : "NA") + ',' +
           format_number(p.effective_n) + ',' + (p.defined() ? "1" : "0") + '\n';
  }
  return out;
}

SurrogateCurve
curve_from_json(const Json& j)
{
  return rethrow_as_format([&] {
    SurrogateCurve c;
    c.kernel = parse_kernel(member(j, "kernel").get<std::string>());
    c.bandwidth = number_or_nan(member(j, "bandwidth"));
    for (const auto& r : member(j, "points")) {
      CurvePoint p;
      p.s = number_or_nan(member(r, "s"));
      if (!member(r, "u").is_null())
        p.u = number_or_nan(r.at("u"));
      p.effective_n = number_or_nan(member(r, "effective_n"));
      c.points.push_back(p);
    }
    return c;
  });
}

SurrogateCurve
curve_from_csv(std::istream& in)
{
  SurrogateCurve c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || trim(line).empty())
      continue;
    const auto f = split_fields(line);
    if (f.size() != 4)
      throw FormatError("expected 4 fields", lineno);
    CurvePoint p;
    double u = 0.0;
    if (!parse_double(f[0], p.s))
      throw FormatError("bad s", lineno, 1);
    if (f[1] != "NA") {
      if (!parse_double(f[1], u))
        throw FormatError("bad u", lineno, 2);
      p.u = u;
    }
    if (!parse_double(f[2], p.effective_n))
      throw FormatError("bad effective_n", lineno, 3);
    c.points.push_back(p);
  }
  return c;
}

std::string
pp_curve_to_csv(const PPCurve& curve)
{
  std::string out = "theoretical,empirical\n";
  for (Eigen::Index i = 0; i < curve.theoretical.size(); ++i)
    out += format_number(curve.theoretical(i)) + ',' + format_number(curve.empirical(i)) + '\n';
  return out;
}

Json
scenario_to_json(const Scenario& scenario)
{
  const auto names = scenario_columns();
  Json j;
  j["name"] = scenario.name;
  j["description"] = scenario.description;
  j["provenance"] = scenario.provenance;
  j["covariates"] = to_string(scenario.covariates);
  j["bernoulli_probability"] = scenario.bernoulli_probability;
  j["generator"] = spec_json(scenario.generator, names);
  j["truth"] = coefficients_json(scenario.truth,
                                 scenario.generator.family.kind == FamilyKind::NegativeBinomial);
  Json fits = Json::array();
  for (const auto& f : scenario.fits) {
    Json fj;
    fj["label"] = f.label;
    fj["true_model"] = f.true_model;
    fj["spec"] = spec_json(f.spec, names);
    fits.push_back(fj);
  }
  j["fits"] = fits;
  return j;
}

Scenario
scenario_from_json(const Json& j)
{
  return rethrow_as_format([&] {
    const auto names = scenario_columns();
    Scenario s;
    s.name = member(j, "name").get<std::string>();
    s.description = j.value("description", "");
    s.provenance = j.value("provenance", "user-supplied");
    if (j.contains("covariates"))
      s.covariates = parse_covariate_law(j.at("covariates").get<std::string>());
    s.bernoulli_probability = j.value("bernoulli_probability", 0.7);
    s.generator = spec_from_json(member(j, "generator"), names);
    s.truth = coefficients_from_json(member(j, "truth"));
    if (s.generator.family.kind == FamilyKind::NegativeBinomial && !std::isfinite(s.truth.size))
      s.truth.size = s.generator.family.size;
    for (const auto& fj : member(j, "fits")) {
      FitCandidate f;
      f.label = member(fj, "label").get<std::string>();
      f.true_model = fj.value("true_model", false);
      f.spec = spec_from_json(member(fj, "spec"), names);
      s.fits.push_back(f);
    }
    if (s.fits.empty())
      throw FormatError("scenario '" + s.name + "' lists no fits");
    if (s.truth.count.size() != static_cast<Eigen::Index>(s.generator.count_columns.size()) ||
        s.truth.zero.size() != static_cast<Eigen::Index>(s.generator.zero_columns.size()) ||
        s.truth.one.size() != static_cast<Eigen::Index>(s.generator.one_columns.size()))
      throw FormatError("scenario '" + s.name + "': true coefficients do not match the generator");
    return s;
  });
}

Json
study_to_json(const StudyResult& result, const Scenario& scenario)
{
  Json j;
  j["scenario"] = scenario_to_json(scenario);
  j["n"] = result.n;
  j["reps"] = result.reps;
  j["seed"] = result.seed;
  j["methods"] = result.methods.to_string();

  Json summaries = Json::array();
  for (const auto& s : result.summaries) {
    Json sj;
    sj["label"] = s.label;
    sj["successes"] = s.successes;
    sj["failures"] = s.failures;
    sj["median_sup_deviation"] = optional_json(s.median_sup_deviation);
    sj["mean_sup_deviation"] = optional_json(s.mean_sup_deviation);
    sj["median_l2"] = optional_json(s.median_l2);
    sj["mean_l2"] = optional_json(s.mean_l2);
    sj["median_ks_cox_snell"] = optional_json(s.median_ks_cox_snell);
    sj["median_ks_pearson"] = optional_json(s.median_ks_pearson);
    sj["median_ks_deviance"] = optional_json(s.median_ks_deviance);
    sj["median_ks_quantile"] = optional_json(s.median_ks_quantile);
    if (result.methods.surrogate) {
      Json env;
      Json rows = Json::array();
      for (std::size_t k = 0; k < s.envelope.s.size(); ++k)
        rows.push_back(Json{ { "s", s.envelope.s[k] },
                             { "lower", optional_json(s.envelope.lower[k]) },
                             { "median", optional_json(s.envelope.median[k]) },
                             { "upper", optional_json(s.envelope.upper[k]) } });
      env["diagonal_coverage"] = s.envelope.diagonal_coverage;
      env["points"] = rows;
      sj["envelope"] = env;
    }
    summaries.push_back(sj);
  }
  j["summaries"] = summaries;

  Json reps = Json::array();
  for (const auto& r : result.replications) {
    Json rj;
    rj["index"] = r.index;
    Json fits = Json::array();
    for (std::size_t f = 0; f < r.fits.size(); ++f) {
      const auto& fr = r.fits[f];
      Json fj;
      fj["label"] = scenario.fits[f].label;
      fj["ok"] = fr.ok;
      if (!fr.ok) {
        fj["error"] = fr.error;
        fits.push_back(fj);
        continue;
      }
      const bool nb = scenario.fits[f].spec.family.kind == FamilyKind::NegativeBinomial;
      fj["coefficients"] = coefficients_json(fr.coefficients, nb);
      fj["std_errors"] = coefficients_json(fr.std_errors, nb);
      if (result.methods.surrogate) {
        fj["bandwidth"] = fr.bandwidth;
        fj["sup_deviation"] = optional_json(fr.sup_deviation);
        fj["l2"] = optional_json(fr.l2);
      }
      if (result.methods.cox_snell)
        fj["ks_cox_snell"] = optional_json(fr.ks_cox_snell);
      if (result.methods.pearson)
        fj["ks_pearson"] = optional_json(fr.ks_pearson);
      if (result.methods.deviance)
        fj["ks_deviance"] = optional_json(fr.ks_deviance);
      if (result.methods.quantile)
        fj["ks_quantile"] = optional_json(fr.ks_quantile);
      fits.push_back(fj);
    }
    rj["fits"] = fits;
    reps.push_back(rj);
  }
  j["replications"] = reps;
  return j;
}

std::string
study_curves_csv(const StudyResult& result, const Scenario& scenario)
{
  std::string out = "replication,fit,s,u\n";
  for (const auto& r : result.replications) {
    for (std::size_t f = 0; f < r.fits.size(); ++f) {
      const auto& fr = r.fits[f];
      for (std::size_t k = 0; k < fr.curve.size(); ++k) {
        out += std::to_string(r.index) + ',' + scenario.fits[f].label + ',' +
               format_number(result.s_grid[k]) + ',' +
               (fr.curve[k] ? format_number(*fr.curve[k]) : "NA") + '\n';
      }
    }
  }
  return out;
}

} // namespace discres
