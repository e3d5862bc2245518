#include <cmath>
#include <limits>

#include "json.hpp"
#include "optdesign/cli.hpp"

namespace optdesign::cli {

using nlohmann::json;

namespace {

// JSON has no NaN or infinity; those travel as strings.
json num(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

json nums(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Vector get_nums(const json& j) {
  Vector v;
  for (const auto& x : j) v.push_back(get_num(x));
  return v;
}

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_num(j.at(key));
}

StopReason parse_stop(const std::string& s) {
  for (auto r : {StopReason::GapBelowEpsilon, StopReason::EquivalenceStop, StopReason::IterLimit,
                 StopReason::InfeasibleConstraint})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown stop reason: " + s);
}

json report_json(const SolveReport& r) {
  json j;
  j["criterion"] = r.criterion;
  j["weights"] = nums(r.design.weights());
  j["phi"] = num(r.phi_value);
  j["upper_bound"] = num(r.upper_bound);
  j["gap"] = num(r.gap);
  j["iterations"] = r.iterations;
  j["cuts"] = r.cuts;
  j["stop_reason"] = to_string(r.stop_reason);
  j["diagnostic"] = r.diagnostic;
  j["equivalence_gap"] = num(r.equivalence_gap);
  j["equivalence_reliable"] = r.equivalence_reliable;
  j["a_value"] = opt(r.a_value);
  j["a_threshold"] = opt(r.a_threshold);
  j["delta_a_achieved"] = opt(r.delta_a_achieved);
  j["efficiencies"] = nums(r.efficiencies);
  j["psi"] = opt(r.psi);
  json trace = json::array();
  for (const auto& e : r.trace)
    trace.push_back({{"iteration", e.iteration},
                     {"upper_bound", num(e.upper_bound)},
                     {"phi", num(e.phi)},
                     {"gap", num(e.gap)},
                     {"a_gap", opt(e.a_gap)}});
  j["trace"] = trace;
  return j;
}

SolveReport report_from(const json& j) {
  SolveReport r;
  r.criterion = j.at("criterion").get<std::string>();
  r.design = Design::from_weights(get_nums(j.at("weights")));
  r.phi_value = get_num(j.at("phi"));
  r.upper_bound = get_num(j.at("upper_bound"));
  r.gap = get_num(j.at("gap"));
  r.iterations = j.at("iterations").get<std::size_t>();
  r.cuts = j.at("cuts").get<std::size_t>();
  r.stop_reason = parse_stop(j.at("stop_reason").get<std::string>());
  r.diagnostic = j.at("diagnostic").get<std::string>();
  r.equivalence_gap = get_num(j.at("equivalence_gap"));
  r.equivalence_reliable = j.at("equivalence_reliable").get<bool>();
  r.a_value = get_opt(j, "a_value");
  r.a_threshold = get_opt(j, "a_threshold");
  r.delta_a_achieved = get_opt(j, "delta_a_achieved");
  r.efficiencies = get_nums(j.at("efficiencies"));
  r.psi = get_opt(j, "psi");
  for (const auto& e : j.at("trace"))
    r.trace.push_back({e.at("iteration").get<std::size_t>(), get_num(e.at("upper_bound")), get_num(e.at("phi")),
                       get_num(e.at("gap")), get_opt(e, "a_gap")});
  return r;
}

}  // namespace

std::string to_json(const RunRecord& record, int indent) {
  json j;
  j["schema_version"] = record.schema_version;
  j["tool_version"] = record.tool_version;
  j["command"] = record.command;
  j["spec_hash"] = record.spec_hash;
  j["timestamp"] = record.timestamp;
  j["wall_time_s"] = num(record.wall_time);
  j["model"] = {{"type", record.model_type}, {"p", record.p}, {"labels", record.labels}};
  j["trace"] = record.trace;
  json reports = json::array();
  for (const auto& r : record.reports) reports.push_back(report_json(r));
  j["reports"] = reports;
  json masses = json::array();
  for (const auto& m : record.class_masses) masses.push_back(nums(m));
  j["class_masses"] = masses;
  j["ek_sweep"] = record.ek ? json{{"values", nums(record.ek->values)}, {"monotone", record.ek->monotone}}
                            : json(nullptr);
  if (record.sweep) {
    json rows = json::array();
    for (const auto& r : record.sweep->rows)
      rows.push_back({{"a", num(r.a)},
                      {"eff_d", num(r.eff_d)},
                      {"eff_a", num(r.eff_a)},
                      {"phi_d", num(r.phi_d)},
                      {"phi_a", num(r.phi_a)},
                      {"iterations", r.iterations},
                      {"stop_reason", to_string(r.stop_reason)},
                      {"error", r.error}});
    j["sweep"] = {{"phi_d_star", num(record.sweep->phi_d_star)},
                  {"phi_a_star", num(record.sweep->phi_a_star)},
                  {"rows", rows}};
  } else {
    j["sweep"] = nullptr;
  }
  if (record.extended) {
    const auto& e = *record.extended;
    j["extended"] = {{"kind", e.kind}, {"k", e.k}, {"objective", num(e.objective)},
                     {"reference", opt(e.reference)}, {"phi", opt(e.phi)}};
  } else {
    j["extended"] = nullptr;
  }
  j["summary"] = record.summary;
  return j.dump(indent);
}

RunRecord from_json(const std::string& text) {
  const json j = json::parse(text);
  RunRecord record;
  record.schema_version = j.at("schema_version").get<int>();
  if (record.schema_version != kSchemaVersion)
    throw std::invalid_argument("unsupported schema_version " + std::to_string(record.schema_version));
  record.tool_version = j.at("tool_version").get<std::string>();
  record.command = j.at("command").get<std::string>();
  record.spec_hash = j.at("spec_hash").get<std::string>();
  record.timestamp = j.at("timestamp").get<std::string>();
  record.wall_time = get_num(j.at("wall_time_s"));
  record.model_type = j.at("model").at("type").get<std::string>();
  record.p = j.at("model").at("p").get<std::size_t>();
  record.labels = j.at("model").at("labels").get<std::vector<std::string>>();
  record.trace = j.at("trace").get<bool>();
  for (const auto& r : j.at("reports")) record.reports.push_back(report_from(r));
  for (const auto& m : j.at("class_masses")) record.class_masses.push_back(get_nums(m));
  if (!j.at("ek_sweep").is_null())
    record.ek = EkSummary{get_nums(j.at("ek_sweep").at("values")), j.at("ek_sweep").at("monotone").get<bool>()};
  if (!j.at("sweep").is_null()) {
    const auto& s = j.at("sweep");
    EfficiencySweep sweep;
    sweep.phi_d_star = get_num(s.at("phi_d_star"));
    sweep.phi_a_star = get_num(s.at("phi_a_star"));
    for (const auto& r : s.at("rows")) {
      SweepRow row;
      row.a = get_num(r.at("a"));
      row.eff_d = get_num(r.at("eff_d"));
      row.eff_a = get_num(r.at("eff_a"));
      row.phi_d = get_num(r.at("phi_d"));
      row.phi_a = get_num(r.at("phi_a"));
      row.iterations = r.at("iterations").get<std::size_t>();
      row.stop_reason = parse_stop(r.at("stop_reason").get<std::string>());
      row.error = r.at("error").get<std::string>();
      sweep.rows.push_back(row);
    }
    record.sweep = sweep;
  }
  if (!j.at("extended").is_null()) {
    const auto& e = j.at("extended");
    record.extended = ExtendedResult{e.at("kind").get<std::string>(), e.at("k").get<std::size_t>(),
                                     get_num(e.at("objective")), get_opt(e, "reference"), get_opt(e, "phi")};
  }
  record.summary = j.at("summary").get<std::string>();
  return record;
}

}  // namespace optdesign::cli
