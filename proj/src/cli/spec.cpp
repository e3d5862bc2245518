#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "optdesign/cli.hpp"
#include "optdesign/criteria.hpp"

namespace optdesign::cli {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

class Reader {
 public:
  void error(const YAML::Node& node, const std::string& field, const std::string& message) {
    std::ostringstream os;
    if (node.IsDefined() && node.Mark().line >= 0) os << "line " << node.Mark().line + 1 << ": ";
    os << field << ": " << message;
    errors.push_back(os.str());
  }

  void expect_map(const YAML::Node& node, const std::string& field) {
    if (!node.IsMap()) error(node, field, "expected a mapping");
  }

  void allowed_keys(const YAML::Node& node, const std::string& field, std::initializer_list<const char*> keys) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        error(kv.first, field.empty() ? key : field + "." + key, "unknown field");
    }
  }

  std::optional<double> number(const YAML::Node& node, const std::string& field) {
    if (!node.IsDefined() || node.IsNull()) return std::nullopt;
    try {
      if (!node.IsScalar()) throw YAML::BadConversion(node.Mark());
      const double v = node.as<double>();
      if (!std::isfinite(v)) {
        error(node, field, "must be finite");
        return std::nullopt;
      }
      return v;
    } catch (const YAML::BadConversion&) {
      error(node, field, "expected a number");
      return std::nullopt;
    }
  }

  std::optional<long long> integer(const YAML::Node& node, const std::string& field) {
    if (!node.IsDefined() || node.IsNull()) return std::nullopt;
    try {
      if (!node.IsScalar()) throw YAML::BadConversion(node.Mark());
      return node.as<long long>();
    } catch (const YAML::BadConversion&) {
      error(node, field, "expected an integer");
      return std::nullopt;
    }
  }

  std::optional<bool> boolean(const YAML::Node& node, const std::string& field) {
    if (!node.IsDefined() || node.IsNull()) return std::nullopt;
    try {
      return node.as<bool>();
    } catch (const YAML::BadConversion&) {
      error(node, field, "expected true or false");
      return std::nullopt;
    }
  }

  std::optional<std::string> string(const YAML::Node& node, const std::string& field) {
    if (!node.IsDefined() || node.IsNull()) return std::nullopt;
    if (!node.IsScalar()) {
      error(node, field, "expected a string");
      return std::nullopt;
    }
    return node.as<std::string>();
  }

  Vector numbers(const YAML::Node& node, const std::string& field) {
    Vector out;
    if (!node.IsDefined() || node.IsNull()) return out;
    if (!node.IsSequence()) {
      error(node, field, "expected a list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i)
      if (auto v = number(node[i], field + "[" + std::to_string(i) + "]")) out.push_back(*v);
    return out;
  }

  std::vector<std::string> strings(const YAML::Node& node, const std::string& field) {
    std::vector<std::string> out;
    if (!node.IsDefined() || node.IsNull()) return out;
    if (!node.IsSequence()) {
      error(node, field, "expected a list");
      return out;
    }
    for (std::size_t i = 0; i < node.size(); ++i)
      if (auto v = string(node[i], field + "[" + std::to_string(i) + "]")) out.push_back(*v);
    return out;
  }

  std::map<std::string, double> weights(const YAML::Node& node, const std::string& field) {
    std::map<std::string, double> out;
    if (!node.IsDefined() || node.IsNull()) return out;
    if (!node.IsMap()) {
      error(node, field, "expected a mapping from point label to weight");
      return out;
    }
    for (const auto& kv : node) {
      const auto label = kv.first.as<std::string>();
      if (auto v = number(kv.second, field + "." + label)) {
        if (*v < 0.0) error(kv.second, field + "." + label, "weight must be nonnegative");
        out[label] = *v;
      }
    }
    return out;
  }

  std::vector<std::string> errors;
};

std::optional<GridSpec> parse_grid(Reader& r, const YAML::Node& node, const std::string& field) {
  if (!node.IsDefined()) return std::nullopt;
  r.expect_map(node, field);
  if (!node.IsMap()) return std::nullopt;
  r.allowed_keys(node, field, {"start", "stop", "step"});
  GridSpec g;
  const auto start = r.number(node["start"], field + ".start");
  const auto stop = r.number(node["stop"], field + ".stop");
  const auto step = r.number(node["step"], field + ".step");
  if (!start) r.error(node, field + ".start", "required");
  if (!stop) r.error(node, field + ".stop", "required");
  if (!step) r.error(node, field + ".step", "required");
  if (!start || !stop || !step) return std::nullopt;
  g.start = *start;
  g.stop = *stop;
  g.step = *step;
  if (!(g.step > 0.0)) r.error(node["step"], field + ".step", "must be positive");
  if (g.stop < g.start) r.error(node["stop"], field + ".stop", "must not be smaller than start");
  return g;
}

void parse_model(Reader& r, const YAML::Node& node, ModelSpec& m, const std::string& base_dir) {
  if (!node.IsDefined()) {
    r.errors.push_back("model: required section missing");
    return;
  }
  r.expect_map(node, "model");
  if (!node.IsMap()) return;
  r.allowed_keys(node, "model", {"type", "degree", "q", "grid", "theta0", "rows", "labels", "path"});
  m.type = r.string(node["type"], "model.type").value_or("");
  static const std::set<std::string> kTypes{"polynomial", "qcube", "qcube_symmetric", "compartment", "custom_matrix"};
  if (m.type.empty()) {
    r.error(node, "model.type", "required");
    return;
  }
  if (!kTypes.count(m.type)) {
    r.error(node["type"], "model.type",
            "unknown model '" + m.type + "' (expected polynomial, qcube, qcube_symmetric, compartment or custom_matrix)");
    return;
  }
  m.grid = parse_grid(r, node["grid"], "model.grid");
  auto need_grid = [&] {
    if (!node["grid"].IsDefined()) r.error(node, "model.grid", "required for model type " + m.type);
  };
  auto unused = [&](const char* key) {
    if (node[key].IsDefined()) r.error(node[key], std::string("model.") + key, "not used by model type " + m.type);
  };
  if (m.type == "polynomial") {
    const auto d = r.integer(node["degree"], "model.degree");
    if (!d) r.error(node, "model.degree", "required");
    else if (*d < 0 || *d > 20) r.error(node["degree"], "model.degree", "must lie in 0..20");
    else m.degree = static_cast<int>(*d);
    need_grid();
    for (const char* k : {"q", "theta0", "rows", "labels", "path"}) unused(k);
  } else if (m.type == "qcube" || m.type == "qcube_symmetric") {
    const auto q = r.integer(node["q"], "model.q");
    if (!q) r.error(node, "model.q", "required");
    else if (*q < 1 || *q > 6) r.error(node["q"], "model.q", "must lie in 1..6");
    else m.q = static_cast<int>(*q);
    if (m.type == "qcube") need_grid();
    else unused("grid");
    for (const char* k : {"degree", "theta0", "rows", "labels", "path"}) unused(k);
  } else if (m.type == "compartment") {
    m.theta0 = r.numbers(node["theta0"], "model.theta0");
    if (m.theta0.size() != 3)
      r.error(node["theta0"].IsDefined() ? node["theta0"] : node, "model.theta0",
              "expected three parameters (theta1, theta2, theta3)");
    need_grid();
    if (m.grid && m.grid->start <= 0.0) r.error(node["grid"]["start"], "model.grid.start", "sampling times must be positive");
    for (const char* k : {"degree", "q", "rows", "labels", "path"}) unused(k);
  } else if (m.type == "custom_matrix") {
    const bool has_rows = node["rows"].IsDefined();
    const bool has_path = node["path"].IsDefined();
    if (has_rows == has_path) r.error(node, "model", "custom_matrix needs exactly one of rows or path");
    if (has_rows) {
      if (!node["rows"].IsSequence()) {
        r.error(node["rows"], "model.rows", "expected a list of rows");
      } else {
        for (std::size_t i = 0; i < node["rows"].size(); ++i)
          m.rows.push_back(r.numbers(node["rows"][i], "model.rows[" + std::to_string(i) + "]"));
      }
    }
    if (has_path) {
      const auto p = r.string(node["path"], "model.path").value_or("");
      std::filesystem::path full(p);
      if (full.is_relative()) full = std::filesystem::path(base_dir) / full;
      if (!std::filesystem::exists(full)) r.error(node["path"], "model.path", "file not found: " + full.string());
      m.path = full.string();
    }
    m.labels = r.strings(node["labels"], "model.labels");
    for (const char* k : {"degree", "q", "grid", "theta0"}) unused(k);
  }
}

void parse_task(Reader& r, const YAML::Node& node, TaskSpec& t) {
  if (!node.IsDefined()) return;
  r.expect_map(node, "task");
  if (!node.IsMap()) return;
  r.allowed_keys(node, "task",
                 {"type", "criterion", "a", "a_list", "normalizers", "base", "prior", "kind", "k", "design",
                  "tuple_design", "deltas", "theta0"});
  t.type = r.string(node["type"], "task.type").value_or("");
  static const std::set<std::string> kTypes{"optimize", "ek_sweep", "maximin", "d_given_a", "ave", "extended_eval"};
  if (!t.type.empty() && !kTypes.count(t.type))
    r.error(node["type"], "task.type",
            "unknown task '" + t.type + "' (expected optimize, ek_sweep, maximin, d_given_a, ave or extended_eval)");
  if (auto c = r.string(node["criterion"], "task.criterion")) {
    try {
      const Criterion crit = parse_criterion(*c);
      if (crit.kind == Criterion::Kind::MaximinEff) throw std::invalid_argument("use the maximin task");
      t.criterion = *c;
    } catch (const std::exception& e) {
      r.error(node["criterion"], "task.criterion", e.what());
    }
  }
  if (auto b = r.string(node["base"], "task.base")) {
    try {
      const Criterion crit = parse_criterion(*b);
      if (crit.kind == Criterion::Kind::MaximinEff) throw std::invalid_argument("base must be D, A or E_k");
      t.base = *b;
    } catch (const std::exception& e) {
      r.error(node["base"], "task.base", e.what());
    }
  }
  t.a = r.number(node["a"], "task.a");
  if (t.a && !(*t.a > 0.0)) r.error(node["a"], "task.a", "must be positive");
  t.a_list = r.numbers(node["a_list"], "task.a_list");
  for (std::size_t i = 0; i < t.a_list.size(); ++i)
    if (!(t.a_list[i] > 0.0)) r.error(node["a_list"][i], "task.a_list[" + std::to_string(i) + "]", "must be positive");
  if (node["normalizers"].IsDefined()) {
    t.normalizers = r.numbers(node["normalizers"], "task.normalizers");
    for (double v : *t.normalizers)
      if (!(v > 0.0)) r.error(node["normalizers"], "task.normalizers", "entries must be positive");
  }
  if (node["prior"].IsDefined()) {
    const YAML::Node prior = node["prior"];
    if (!prior.IsSequence() || prior.size() == 0) {
      r.error(prior, "task.prior", "expected a nonempty list of {theta, weight} atoms");
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < prior.size(); ++i) {
        const std::string f = "task.prior[" + std::to_string(i) + "]";
        r.expect_map(prior[i], f);
        r.allowed_keys(prior[i], f, {"theta", "weight"});
        PriorAtom atom;
        atom.theta = r.numbers(prior[i]["theta"], f + ".theta");
        const auto w = r.number(prior[i]["weight"], f + ".weight");
        if (!w) r.error(prior[i], f + ".weight", "required");
        else if (!(*w > 0.0)) r.error(prior[i]["weight"], f + ".weight", "must be positive");
        else atom.weight = *w;
        total += atom.weight;
        t.prior.push_back(std::move(atom));
      }
      if (std::abs(total - 1.0) > 1e-9) r.error(prior, "task.prior", "weights must sum to one");
    }
  }
  if (auto kind = r.string(node["kind"], "task.kind")) {
    try {
      t.extended_kind = to_string(parse_extended_kind(*kind));
    } catch (const std::exception& e) {
      r.error(node["kind"], "task.kind", e.what());
    }
  }
  if (auto k = r.integer(node["k"], "task.k")) {
    if (*k < 1) r.error(node["k"], "task.k", "must be at least 1");
    else t.k = static_cast<std::size_t>(*k);
  }
  t.design = r.weights(node["design"], "task.design");
  t.tuple_design = r.weights(node["tuple_design"], "task.tuple_design");
  if (node["deltas"].IsDefined()) {
    if (!node["deltas"].IsSequence()) {
      r.error(node["deltas"], "task.deltas", "expected a list of vectors");
    } else {
      for (std::size_t i = 0; i < node["deltas"].size(); ++i)
        t.deltas.push_back(r.numbers(node["deltas"][i], "task.deltas[" + std::to_string(i) + "]"));
    }
  }
  t.theta0 = r.numbers(node["theta0"], "task.theta0");
}

void parse_solver(Reader& r, const YAML::Node& node, ProblemSpec& spec) {
  if (!node.IsDefined()) return;
  r.expect_map(node, "solver");
  if (!node.IsMap()) return;
  r.allowed_keys(node, "solver",
                 {"epsilon", "gamma", "delta_a", "max_iter", "stop_on_equivalence", "initial_support", "parallel"});
  SolveConfig& c = spec.solver;
  if (auto v = r.number(node["epsilon"], "solver.epsilon")) {
    if (!(*v > 0.0)) r.error(node["epsilon"], "solver.epsilon", "must be positive");
    else c.epsilon = *v;
  }
  if (auto v = r.number(node["gamma"], "solver.gamma")) {
    if (*v < 0.0) r.error(node["gamma"], "solver.gamma", "must be nonnegative");
    else c.gamma = *v;
  }
  if (auto v = r.number(node["delta_a"], "solver.delta_a")) c.delta_a = *v;
  if (auto v = r.integer(node["max_iter"], "solver.max_iter")) {
    if (*v < 1) r.error(node["max_iter"], "solver.max_iter", "must be at least 1");
    else c.max_iter = static_cast<std::size_t>(*v);
  }
  if (auto v = r.number(node["stop_on_equivalence"], "solver.stop_on_equivalence")) {
    if (*v < 0.0) r.error(node["stop_on_equivalence"], "solver.stop_on_equivalence", "must be nonnegative");
    else c.stop_on_equivalence = *v;
  }
  spec.initial_support = r.strings(node["initial_support"], "solver.initial_support");
  if (auto v = r.boolean(node["parallel"], "solver.parallel")) spec.parallel = *v;
}

void parse_output(Reader& r, const YAML::Node& node, OutputSpec& o) {
  if (!node.IsDefined()) return;
  r.expect_map(node, "output");
  if (!node.IsMap()) return;
  r.allowed_keys(node, "output", {"format", "path", "trace"});
  if (auto f = r.string(node["format"], "output.format")) {
    if (*f != "table" && *f != "csv" && *f != "json")
      r.error(node["format"], "output.format", "expected table, csv or json");
    else o.format = *f;
  }
  o.path = r.string(node["path"], "output.path").value_or("");
  if (auto t = r.boolean(node["trace"], "output.trace")) o.trace = *t;
}

}  // namespace

SpecError::SpecError(std::vector<std::string> messages)
    : std::runtime_error(join(messages)), messages_(std::move(messages)) {}

ProblemSpec parse_spec(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SpecError({"line " + std::to_string(e.mark.line + 1) + ": syntax: " + e.msg});
  }
  const YAML::Node& doc = root;
  Reader r;
  ProblemSpec spec;
  spec.source_text = text;
  if (!doc.IsMap()) throw SpecError({"document: expected a mapping with model, task, solver and output sections"});
  r.allowed_keys(doc, "", {"model", "task", "solver", "output"});
  parse_model(r, doc["model"], spec.model, base_dir);
  parse_task(r, doc["task"], spec.task);
  parse_solver(r, doc["solver"], spec);
  parse_output(r, doc["output"], spec.output);
  if (!r.errors.empty()) throw SpecError(r.errors);
  return spec;
}

ProblemSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read problem file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_spec(os.str(), dir.empty() ? "." : dir.string());
}

namespace {

std::vector<Vector> read_matrix_csv(const std::string& path, std::vector<std::string>& labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read matrix file: " + path);
  std::vector<Vector> rows;
  std::vector<std::string> found_labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    Vector row;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      bool numeric = true;
      try {
        v = std::stod(cell, &used);
        numeric = cell.find_first_not_of(" \t\r", used) == std::string::npos;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) {
        if (!first) throw SpecError({path + ":" + std::to_string(line_no) + ": model.path: non-numeric entry '" + cell + "'"});
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t\r");
        found_labels.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
      } else {
        row.push_back(v);
      }
      first = false;
    }
    rows.push_back(std::move(row));
  }
  if (!found_labels.empty()) {
    if (found_labels.size() != rows.size())
      throw SpecError({path + ": model.path: either every row or no row starts with a label"});
    if (labels.empty()) labels = std::move(found_labels);
  }
  return rows;
}

}  // namespace

BuiltModel build_model(const ModelSpec& m) {
  try {
    if (m.type == "polynomial") {
      const Vector grid = make_grid(m.grid->start, m.grid->stop, m.grid->step);
      return {poly_model(m.degree, grid), std::nullopt, {}};
    }
    if (m.type == "qcube") {
      const Vector axis = make_grid(m.grid->start, m.grid->stop, m.grid->step);
      return {qcube_model(m.q, cartesian_grid(m.q, axis)), std::nullopt, {}};
    }
    if (m.type == "qcube_symmetric") {
      SymmetricSpace s = qcube_symmetric_space(m.q);
      return {std::move(s.space), std::move(s.support), {}};
    }
    if (m.type == "compartment") {
      const Vector grid = make_grid(m.grid->start, m.grid->stop, m.grid->step);
      return {compartment_model(m.theta0, grid), std::nullopt, grid};
    }
    if (m.type == "custom_matrix") {
      std::vector<std::string> labels = m.labels;
      std::vector<Vector> rows = m.path.empty() ? m.rows : read_matrix_csv(m.path, labels);
      return {custom_matrix_model(rows, labels), std::nullopt, {}};
    }
  } catch (const SpecError&) {
    throw;
  } catch (const IoError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SpecError({"model: " + std::string(e.what())});
  }
  throw SpecError({"model.type: unknown model '" + m.type + "'"});
}

}  // namespace optdesign::cli
