#pragma once

#include "discres/io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace discres {

//! Exit codes of the command-line tool.
enum ExitCode : int
{
  kExitSuccess = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitConvergence = 4,
  kExitInternal = 5,
};

//! Every parameter of one command invocation. Serialized into each output
//! artifact; `workers` and `out` are execution details and are left out so
//! that artifacts do not depend on them.
struct RunConfig
{
  std::string command;
  std::vector<std::string> inputs;

  std::string family = "poisson";
  std::string link;
  std::string formula;
  std::string outcome;

  std::string kernel = "epanechnikov";
  std::optional<double> bandwidth;
  double s_lo = 0.05;
  double s_hi = 0.95;
  std::size_t s_count = 121;
  double l2_lo = 0.3;
  double l2_hi = 0.9;
  std::size_t mesh_size = 25;
  std::string residuals;

  std::string scenario;
  std::string scenario_file;
  std::size_t n = 500;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::string methods = "all";
  double sup_lo = 0.2;
  double sup_hi = 0.8;

  int workers = 1;
  std::string out;
  std::string dump_curves;

  Json to_json() const;
  static RunConfig from_json(const Json& j);

  DiagnosticOptions diagnostic_options() const;
};

//! Right-hand sides per block, e.g. "count: a + b | zero: a | one: a".
//! An unlabelled first segment is the count block. The intercept is
//! implicit; "1" is accepted and ignored.
struct Formula
{
  std::vector<std::string> count;
  std::vector<std::string> zero;
  std::vector<std::string> one;
  bool has_zero = false;
  bool has_one = false;

  //! Distinct covariate names in order of first appearance.
  std::vector<std::string> columns() const;
};

Formula parse_formula(const std::string& text);

//! Model spec over the design [1, formula.columns()...]. Inflation blocks
//! default to intercept-only for ZIP/ZOIP.
ModelSpec build_spec(const Formula& formula, FamilyKind family, Link link);

//! Header row "label" cells and one row of L2 x 1000 values with three
//! decimals ("NA" when undefined), column-aligned.
std::string l2_table(const std::vector<std::string>& labels,
                     const std::vector<std::optional<double>>& l2, double lo, double hi);

//! Coefficient table with Count / Zero / One blocks.
std::string coefficient_table(const FittedModel& fitted, const std::vector<std::string>& columns);

std::string display_name(FamilyKind kind);

//! Wraps a payload with the version and the run configuration.
Json artifact(const RunConfig& config, const char* kind, Json payload);

Json cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
Json cmd_diagnose(const RunConfig& config, std::ostream& out, std::ostream& err);
Json cmd_compare(const RunConfig& config, std::ostream& out, std::ostream& err);
Json cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

//! Dispatches on config.command and writes the artifacts.
void execute(const RunConfig& config, std::ostream& out, std::ostream& err);

//! Parses arguments (without the program name), runs, and maps errors to
//! exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace discres
