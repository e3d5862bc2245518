#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

#include "optdesign/cli.hpp"
#include "optdesign/linalg.hpp"

namespace optdesign::cli {

namespace {

struct Args {
  std::string spec;
  std::string out;
  std::string format;
  std::optional<double> epsilon;
  std::optional<double> gamma;
  std::optional<std::size_t> max_iter;
  bool trace = false;
  bool parallel = false;
  bool dump_lp = false;
};

void add_common(CLI::App* sub, Args& args) {
  sub->add_option("--spec", args.spec, "Problem file (YAML)")->required();
  sub->add_option("--out", args.out, "Write output here instead of stdout");
  sub->add_option("--format", args.format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
  sub->add_option("--epsilon", args.epsilon, "Stopping tolerance on t - phi");
  sub->add_option("--gamma", args.gamma, "Regularization for singular designs");
  sub->add_option("--max-iter", args.max_iter, "Iteration limit");
  sub->add_flag("--trace", args.trace, "Show the per-iteration bounds");
  sub->add_flag("--parallel", args.parallel, "Run sweep points concurrently");
  sub->add_flag("--dump-lp", args.dump_lp, "Print the final LP to stderr");
}

void report_failure(const RunRecord& record) {
  for (const auto& r : record.reports) {
    if (r.stop_reason != StopReason::InfeasibleConstraint && r.stop_reason != StopReason::IterLimit) continue;
    std::cerr << "error: " << r.criterion << " stopped with " << to_string(r.stop_reason);
    if (!r.diagnostic.empty()) std::cerr << ": " << r.diagnostic;
    std::cerr << "\n";
    const std::size_t tail = std::min<std::size_t>(5, r.trace.size());
    for (std::size_t i = r.trace.size() - tail; i < r.trace.size(); ++i) {
      const auto& e = r.trace[i];
      std::cerr << "  iter " << e.iteration << "  t = " << e.upper_bound << "  phi = " << e.phi
                << "  gap = " << e.gap << "\n";
    }
  }
  if (record.sweep)
    for (const auto& row : record.sweep->rows)
      if (row.stop_reason == StopReason::IterLimit)
        std::cerr << "error: a = " << row.a << " stopped with IterLimit: " << row.error << "\n";
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Optimal approximate designs by the cutting-plane method"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Args args;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "Maximize a D, A or E_k criterion"},
      {"ek-sweep", "E_k optima for k = 1..p"},
      {"maximin", "Maximin efficient design over the E_k family"},
      {"d-given-a", "D-optimal design subject to phi_A >= a"},
      {"sweep-a", "Efficiencies of D-given-A designs over a list of thresholds"},
      {"ave", "Prior-averaged criterion for a nonlinear model"},
      {"extended-eval", "Evaluate an extended objective for one perturbation tuple"},
      {"validate", "Check a problem file without solving"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSpecError;
  }
  RunOptions options;
  options.command = app.get_subcommands().front()->get_name();
  options.epsilon = args.epsilon;
  options.gamma = args.gamma;
  options.max_iter = args.max_iter;
  options.trace = args.trace;
  options.parallel = args.parallel;
  options.lp_dump = args.dump_lp ? &std::cerr : nullptr;
  options.warnings = &std::cerr;

  ProblemSpec spec;
  RunRecord record;
  try {
    spec = load_spec(args.spec);
    record = run(spec, options);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const SpecError& e) {
    for (const auto& m : e.messages()) std::cerr << args.spec << ": " << m << "\n";
    return kExitSpecError;
  } catch (const std::invalid_argument& e) {
    std::cerr << args.spec << ": " << e.what() << "\n";
    return kExitSpecError;
  } catch (const NearSingular& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const std::exception& e) {
    std::cerr << "error: solver failed: " << e.what() << "\n";
    return kExitIterLimit;
  }

  const std::string format = !args.format.empty() ? args.format : spec.output.format;
  const std::string path = !args.out.empty() ? args.out : spec.output.path;
  if (path.empty()) {
    emit(record, format, std::cout);
  } else {
    std::ofstream out(path);
    if (!out) {
      std::cerr << "error: cannot write " << path << "\n";
      return kExitIoError;
    }
    emit(record, format, out);
    out.close();
    if (!out) {
      std::cerr << "error: write to " << path << " failed\n";
      return kExitIoError;
    }
  }
  const int code = exit_code(record);
  if (code != kExitOk) report_failure(record);
  return code;
}

}  // namespace optdesign::cli
