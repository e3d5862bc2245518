#include <chrono>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "optdesign/cli.hpp"
#include "optdesign/criteria.hpp"
#include "optdesign/lp.hpp"

namespace optdesign::cli {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Design design_from_map(const DesignSpace& space, const std::map<std::string, double>& weights,
                       const std::string& field) {
  if (weights.empty()) return uniform_design(space);
  Vector w(space.size(), 0.0);
  std::vector<std::string> errors;
  for (const auto& [label, value] : weights) {
    const auto idx = space.index_of(label);
    if (!idx) {
      errors.push_back(field + ": unknown point label '" + label + "'");
      continue;
    }
    w[*idx] = value;
  }
  if (!errors.empty()) throw SpecError(errors);
  try {
    return Design::from_weights(std::move(w));
  } catch (const std::invalid_argument& e) {
    throw SpecError({field + ": " + e.what()});
  }
}

Criterion criterion_from(const std::string& text, const std::string& field, std::size_t p) {
  try {
    Criterion c = parse_criterion(text);
    c.validate(p);
    return c;
  } catch (const std::invalid_argument& e) {
    throw SpecError({field + ": " + e.what()});
  }
}

void record_masses(RunRecord& record, const BuiltModel& model) {
  if (!model.symmetric) return;
  for (const auto& r : record.reports) record.class_masses.push_back(model.symmetric->class_mass(r.design));
}

}  // namespace

std::string task_type_for(const std::string& command) {
  if (command == "solve") return "optimize";
  if (command == "ek-sweep") return "ek_sweep";
  if (command == "maximin") return "maximin";
  if (command == "d-given-a" || command == "sweep-a") return "d_given_a";
  if (command == "ave") return "ave";
  if (command == "extended-eval") return "extended_eval";
  if (command == "validate") return "";
  throw std::invalid_argument("unknown subcommand '" + command + "'");
}

std::string spec_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RunRecord run(const ProblemSpec& spec, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const std::string task = task_type_for(options.command);
  if (!task.empty() && !spec.task.type.empty() && spec.task.type != task)
    throw SpecError({"task.type: '" + spec.task.type + "' does not match subcommand '" + options.command + "'"});

  BuiltModel model = build_model(spec.model);
  const DesignSpace& space = model.space;
  if (!space.full_rank() && options.warnings)
    *options.warnings << "warning: the feature vectors do not span R^" << space.dim()
                      << "; every design has a singular information matrix\n";

  RunRecord record;
  record.command = options.command;
  record.spec_hash = spec_hash(spec.source_text);
  record.timestamp = utc_timestamp();
  record.model_type = spec.model.type;
  record.p = space.dim();
  for (std::size_t i = 0; i < space.size(); ++i) record.labels.push_back(space.label(i));
  record.trace = options.trace || spec.output.trace;

  SolveConfig config = spec.solver;
  if (options.epsilon) config.epsilon = *options.epsilon;
  if (options.gamma) config.gamma = *options.gamma;
  if (options.max_iter) config.max_iter = *options.max_iter;
  config.record_trace = true;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError({std::string("solver: ") + e.what()});
  }
  if (!spec.initial_support.empty()) {
    try {
      config.initial_designs.push_back(uniform_on(space, spec.initial_support));
    } catch (const std::invalid_argument& e) {
      throw SpecError({std::string("solver.initial_support: ") + e.what()});
    }
  }
  if (options.lp_dump) {
    std::ostream* dump = options.lp_dump;
    config.final_lp_hook = [dump](const CutLP& lp) { *dump << dump_lp(lp); };
  }
  const bool parallel = options.parallel || spec.parallel;
  const TaskSpec& t = spec.task;

  if (task.empty()) {
    std::ostringstream os;
    os << "model " << spec.model.type << ": " << space.size() << " points, p = " << space.dim()
       << (space.full_rank() ? ", full rank" : ", rank deficient");
    if (!spec.task.type.empty()) os << "; task " << spec.task.type;
    os << "; spec ok";
    record.summary = os.str();
  } else if (task == "optimize") {
    const Criterion c = criterion_from(t.criterion, "task.criterion", space.dim());
    record.reports.push_back(solve(c, space, config));
    record_masses(record, model);
  } else if (task == "ek_sweep") {
    const EkSweep sweep = solve_ek_sweep(space, config, parallel);
    record.ek = EkSummary{sweep.values(), sweep.monotone};
    for (const auto& e : sweep.entries) record.reports.push_back(e.report);
    record_masses(record, model);
    if (!sweep.monotone && options.warnings)
      *options.warnings << "warning: E_k optima are not nondecreasing in k; check the tolerance settings\n";
  } else if (task == "maximin") {
    std::optional<Vector> normalizers = t.normalizers;
    if (normalizers && normalizers->size() != space.dim())
      throw SpecError({"task.normalizers: expected " + std::to_string(space.dim()) + " values"});
    if (!normalizers) {
      const EkSweep sweep = solve_ek_sweep(space, config, parallel);
      normalizers = sweep.values();
      record.ek = EkSummary{*normalizers, sweep.monotone};
    }
    record.reports.push_back(solve_maximin(space, config, normalizers));
    record_masses(record, model);
  } else if (task == "d_given_a") {
    Vector a_values = t.a_list;
    if (t.a) a_values.insert(a_values.begin(), *t.a);
    if (a_values.empty()) throw SpecError({"task.a: required (or task.a_list)"});
    if (options.command == "sweep-a") {
      record.sweep = efficiency_sweep(space, a_values, config, parallel);
    } else {
      SolveConfig a_config = config;
      a_config.final_lp_hook = nullptr;
      const double a_star = solve(Criterion::a(), space, a_config).phi_value;
      for (double a : a_values) {
        SolveReport r = solve_d_given_a(space, a, config, a_star);
        if (r.stop_reason == StopReason::InfeasibleConstraint) {
          std::ostringstream os;
          os << "a = " << a << " is not attainable: the A-optimal value is " << std::setprecision(6) << a_star
             << "; choose a below it";
          r.diagnostic = os.str();
        }
        record.reports.push_back(std::move(r));
      }
    }
  } else if (task == "ave") {
    if (t.prior.empty()) throw SpecError({"task.prior: required for the ave task"});
    const Criterion base = criterion_from(t.base, "task.base", space.dim());
    Prior prior;
    for (std::size_t i = 0; i < t.prior.size(); ++i) {
      const auto& atom = t.prior[i];
      if (spec.model.type == "compartment") {
        if (atom.theta.size() != 3)
          throw SpecError({"task.prior[" + std::to_string(i) + "].theta: expected three parameters"});
        prior.spaces.push_back(compartment_model(atom.theta, model.times));
      } else {
        prior.spaces.push_back(space);
      }
      prior.weights.push_back(atom.weight);
    }
    record.reports.push_back(solve_ave(base, prior, config));
  } else if (task == "extended_eval") {
    const std::size_t p = space.dim();
    const ExtendedKind kind = parse_extended_kind(t.extended_kind);
    if (kind == ExtendedKind::eEk && t.k > p) throw SpecError({"task.k: must not exceed p = " + std::to_string(p)});
    const Design design = design_from_map(space, t.design, "task.design");
    const bool linear = spec.model.type != "compartment";
    Vector theta0 = linear ? (t.theta0.empty() ? Vector(p, 0.0) : t.theta0) : spec.model.theta0;
    if (theta0.size() != p) throw SpecError({"task.theta0: expected " + std::to_string(p) + " values"});
    const PointResponse response =
        linear ? linear_response(space) : compartment_point_response(model.times);

    PerturbationTuple tuple;
    std::optional<Design> mu;
    if (!t.deltas.empty()) {
      tuple = PerturbationTuple{theta0, t.deltas};
    } else {
      mu = t.tuple_design.empty() ? design : design_from_map(space, t.tuple_design, "task.tuple_design");
      try {
        tuple = tuple_from_design(space, *mu, theta0);
      } catch (const NearSingular&) {
        throw SpecError({"task.tuple_design: the information matrix is singular; no tuple can be formed"});
      }
    }
    try {
      tuple.validate();
    } catch (const std::invalid_argument& e) {
      throw SpecError({std::string("task.deltas: ") + e.what()});
    }
    ExtendedResult ext;
    ext.kind = to_string(kind);
    ext.k = kind == ExtendedKind::eEk ? t.k : 0;
    ext.objective = extended_objective(kind, t.k, response, space.size(), design, tuple);
    if (linear) {
      const Criterion c = kind == ExtendedKind::eD ? Criterion::d()
                          : kind == ExtendedKind::eA ? Criterion::a()
                                                     : Criterion::ek(t.k);
      ext.phi = phi(c, space, design);
      if (mu) {
        try {
          ext.reference = cut(c, space, *mu).evaluate(design.weights());
        } catch (const NearSingular&) {
        }
      }
    }
    record.extended = ext;
  }

  record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

int exit_code(const RunRecord& record) {
  bool infeasible = false, limit = false;
  for (const auto& r : record.reports) {
    if (r.stop_reason == StopReason::InfeasibleConstraint) infeasible = true;
    if (r.stop_reason == StopReason::IterLimit) limit = true;
  }
  if (record.sweep)
    for (const auto& row : record.sweep->rows)
      if (row.stop_reason == StopReason::IterLimit) limit = true;
  if (infeasible) return kExitInfeasible;
  if (limit) return kExitIterLimit;
  return kExitOk;
}

}  // namespace optdesign::cli
