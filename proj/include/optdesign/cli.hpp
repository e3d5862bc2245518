#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optdesign/cutter.hpp"
#include "optdesign/extended.hpp"
#include "optdesign/model.hpp"

namespace optdesign::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitSpecError = 2,
  kExitInfeasible = 3,
  kExitIterLimit = 4,
  kExitIoError = 5,
};

/// Every problem found while reading a problem file, one "line N: field: message" per entry.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
};

struct ModelSpec {
  std::string type;  // polynomial | qcube | qcube_symmetric | compartment | custom_matrix
  int degree = 0;
  int q = 0;
  std::optional<GridSpec> grid;
  Vector theta0;
  std::vector<Vector> rows;
  std::vector<std::string> labels;
  std::string path;  // custom_matrix CSV, resolved against the spec directory
};

struct PriorAtom {
  Vector theta;
  double weight = 0.0;
};

struct TaskSpec {
  std::string type;  // optimize | ek_sweep | maximin | d_given_a | ave | extended_eval; empty = from subcommand
  std::string criterion = "D";
  std::optional<double> a;
  Vector a_list;
  std::optional<Vector> normalizers;
  std::string base = "D";
  std::vector<PriorAtom> prior;
  std::string extended_kind = "eD";
  std::size_t k = 1;
  std::map<std::string, double> design;        // label -> weight; empty = uniform
  std::map<std::string, double> tuple_design;  // design whose spectrum gives the tuple; empty = `design`
  std::vector<Vector> deltas;                  // explicit tuple; overrides tuple_design
  Vector theta0;                               // linear models only; default zeros
};

struct OutputSpec {
  std::string format = "table";
  std::string path;
  bool trace = false;
};

struct ProblemSpec {
  ModelSpec model;
  TaskSpec task;
  SolveConfig solver;
  std::vector<std::string> initial_support;
  bool parallel = false;
  OutputSpec output;
  std::string source_text;
};

/// Parses the YAML problem format documented in docs/problem-format.md.
/// `base_dir` resolves relative paths.  Throws SpecError.
ProblemSpec parse_spec(const std::string& text, const std::string& base_dir = ".");
ProblemSpec load_spec(const std::string& path);

struct BuiltModel {
  DesignSpace space;
  std::optional<SymmetricSupport> symmetric;
  Vector times;  // compartment sampling times
};

BuiltModel build_model(const ModelSpec& model);

/// Overrides applied on top of the problem file.
struct RunOptions {
  std::string command;  // solve | ek-sweep | maximin | d-given-a | sweep-a | ave | extended-eval | validate
  std::optional<double> epsilon;
  std::optional<double> gamma;
  std::optional<std::size_t> max_iter;
  bool trace = false;
  bool parallel = false;
  std::ostream* lp_dump = nullptr;
  std::ostream* warnings = nullptr;
};

struct EkSummary {
  Vector values;
  bool monotone = true;
};

struct ExtendedResult {
  std::string kind;
  std::size_t k = 0;
  double objective = 0.0;
  /// sum_x H(mu, x) xi(x) for the matching local criterion (linear models).
  std::optional<double> reference;
  std::optional<double> phi;
};

struct RunRecord {
  int schema_version = kSchemaVersion;
  std::string tool_version = kToolVersion;
  std::string command;
  std::string spec_hash;
  std::string timestamp;
  double wall_time = 0.0;
  std::string model_type;
  std::size_t p = 0;
  std::vector<std::string> labels;
  bool trace = false;
  std::vector<SolveReport> reports;
  std::vector<Vector> class_masses;  // one per report, symmetric q-cube only
  std::optional<EkSummary> ek;
  std::optional<EfficiencySweep> sweep;
  std::optional<ExtendedResult> extended;
  std::string summary;  // validate
};

/// Subcommand name to the task type it runs.
std::string task_type_for(const std::string& command);

RunRecord run(const ProblemSpec& spec, const RunOptions& options);

/// Process exit code for a finished run.
int exit_code(const RunRecord& record);

void emit(const RunRecord& record, const std::string& format, std::ostream& out);
void emit_table(const RunRecord& record, std::ostream& out);
void emit_csv(const RunRecord& record, std::ostream& out);

std::string to_json(const RunRecord& record, int indent = 2);
RunRecord from_json(const std::string& text);

/// FNV-1a 64 of the problem text, as 16 hex digits.
std::string spec_hash(const std::string& text);

/// Entry point shared by the executable and the tests.
int main_entry(int argc, char** argv);

}  // namespace optdesign::cli
