#pragma once

#include "discres/fitting.hpp"
#include "discres/residuals.hpp"
#include "discres/simlab.hpp"
#include "discres/surrogate.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace discres {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kInterceptName = "(Intercept)";

//! A numeric CSV table with a header row.
struct CsvTable
{
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  //! Column index of `name`; FormatError when absent.
  Eigen::Index column(const std::string& name) const;
};

//! Comma-separated, header required, '.' decimal. Every data cell must parse
//! as a number; errors carry the 1-based line and column.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

//! Design [1, columns...] and outcome vector. Outcomes must be non-negative
//! integers.
Dataset make_dataset(const CsvTable& table, const std::string& outcome,
                     const std::vector<std::string>& columns);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json read_json_file(const std::string& path);

//! Fitted-model artifact. Blocks reference design columns by name.
Json fitted_to_json(const FittedModel& fitted, const std::vector<std::string>& column_names);

//! Inverse of fitted_to_json. `column_names` receives the design columns
//! (intercept first) that the spec indexes into.
FittedModel fitted_from_json(const Json& j, std::vector<std::string>& column_names);

Json curve_to_json(const SurrogateCurve& curve);
//! Columns s,u,effective_n,defined; undefined u is written as NA.
std::string curve_to_csv(const SurrogateCurve& curve);
SurrogateCurve curve_from_json(const Json& j);
SurrogateCurve curve_from_csv(std::istream& in);

std::string pp_curve_to_csv(const PPCurve& curve);

Json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& j);

Json study_to_json(const StudyResult& result, const Scenario& scenario);
//! One row per (replication, fit, s): replication,fit,s,u.
std::string study_curves_csv(const StudyResult& result, const Scenario& scenario);

//! Shortest round-trip decimal form of a double (17 significant digits at
//! most).
std::string format_number(double x);

} // namespace discres
