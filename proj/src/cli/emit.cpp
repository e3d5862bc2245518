#include <algorithm>
#include <cmath>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>

#include "optdesign/cli.hpp"

namespace optdesign::cli {

namespace {

constexpr double kDisplayThreshold = 1e-6;
constexpr std::size_t kColumnsPerBlock = 8;

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string general(double v, int digits = 6) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(digits) << v;
  return os.str();
}

std::string exact(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void row(std::ostream& out, const std::string& head, const std::vector<std::string>& cells, std::size_t width) {
  out << std::left << std::setw(12) << head;
  for (const auto& c : cells) out << std::right << std::setw(static_cast<int>(width)) << c;
  out << "\n";
}

void design_block(std::ostream& out, const RunRecord& record, const Design& raw) {
  const Design design = pruned(raw, kDisplayThreshold);
  const auto support = design.support();
  std::size_t width = 9;
  for (auto i : support) width = std::max(width, record.labels[i].size() + 2);
  for (std::size_t start = 0; start < support.size(); start += kColumnsPerBlock) {
    std::vector<std::string> labels, weights;
    for (std::size_t j = start; j < std::min(support.size(), start + kColumnsPerBlock); ++j) {
      labels.push_back(record.labels[support[j]]);
      weights.push_back(fixed(design[support[j]], 4));
    }
    row(out, start == 0 ? "support" : "", labels, width);
    row(out, start == 0 ? "weights" : "", weights, width);
  }
  const std::size_t hidden = std::count_if(raw.weights().begin(), raw.weights().end(),
                                           [](double w) { return w > 0.0 && w < kDisplayThreshold; });
  if (hidden > 0) out << "            (" << hidden << " points below 1e-6 pruned from display)\n";
}

void trace_block(std::ostream& out, const SolveReport& r) {
  if (r.trace.empty()) return;
  const bool has_a = r.trace.front().a_gap.has_value();
  out << "trace\n" << std::right << std::setw(8) << "iter" << std::setw(22) << "t" << std::setw(22) << "phi"
      << std::setw(14) << "gap";
  if (has_a) out << std::setw(14) << "a_gap";
  out << "\n";
  for (const auto& e : r.trace) {
    out << std::setw(8) << e.iteration << std::setw(22) << general(e.upper_bound, 15) << std::setw(22)
        << general(e.phi, 15) << std::setw(14) << general(e.gap, 4);
    if (has_a) out << std::setw(14) << general(e.a_gap.value_or(NAN), 4);
    out << "\n";
  }
}

void report_block(std::ostream& out, const RunRecord& record, std::size_t index) {
  const SolveReport& r = record.reports[index];
  out << "criterion   " << r.criterion << "\n";
  const bool rejected = r.stop_reason == StopReason::InfeasibleConstraint && r.iterations == 0;
  if (!rejected) design_block(out, record, r.design);
  if (index < record.class_masses.size()) {
    std::vector<std::string> heads, masses;
    for (std::size_t c = 0; c < record.class_masses[index].size(); ++c) {
      heads.push_back("C" + std::to_string(c));
      masses.push_back(fixed(record.class_masses[index][c], 4));
    }
    row(out, "class", heads, 9);
    row(out, "mass", masses, 9);
  }
  if (!r.efficiencies.empty()) {
    std::vector<std::string> heads, effs;
    for (std::size_t k = 0; k < r.efficiencies.size(); ++k) {
      heads.push_back("E" + std::to_string(k + 1));
      effs.push_back(fixed(r.efficiencies[k], 4));
    }
    row(out, "k", heads, 9);
    row(out, "efficiency", effs, 9);
  }
  if (!rejected) out << std::left << std::setw(12) << (r.psi ? "Psi*" : "phi*") << general(r.phi_value, 8) << "\n";
  if (r.a_threshold) {
    out << std::setw(12) << "a" << general(*r.a_threshold, 8) << "\n";
    if (r.a_value) out << std::setw(12) << "phi_A" << general(*r.a_value, 8) << "\n";
    if (r.delta_a_achieved) out << std::setw(12) << "delta_A" << general(*r.delta_a_achieved, 4) << "\n";
  }
  out << std::setw(12) << "gap" << general(r.gap, 4) << "\n";
  out << std::setw(12) << "iter." << r.iterations << "\n";
  out << std::setw(12) << "d(xi*)" << general(r.equivalence_gap, 4)
      << (r.equivalence_reliable || std::isnan(r.equivalence_gap) ? "" : " (not reliable)") << "\n";
  out << std::setw(12) << "stop" << to_string(r.stop_reason) << "\n";
  if (!r.diagnostic.empty()) out << std::setw(12) << "note" << r.diagnostic << "\n";
  if (record.trace) trace_block(out, r);
}

}  // namespace

void emit_table(const RunRecord& record, std::ostream& out) {
  if (!record.summary.empty()) out << record.summary << "\n";
  if (record.ek) {
    out << std::right << std::setw(4) << "k" << std::setw(14) << "E_k(opt)" << std::setw(8) << "iter."
        << "  stop\n";
    for (std::size_t k = 0; k < record.ek->values.size(); ++k) {
      out << std::setw(4) << k + 1 << std::setw(14) << fixed(record.ek->values[k], 6);
      if (record.command == "ek-sweep" && k < record.reports.size())
        out << std::setw(8) << record.reports[k].iterations << "  " << to_string(record.reports[k].stop_reason);
      out << "\n";
    }
    if (!record.ek->monotone) out << "warning: E_k(opt) not nondecreasing in k\n";
    out << "\n";
  }
  if (record.command != "ek-sweep") {
    for (std::size_t i = 0; i < record.reports.size(); ++i) {
      if (i > 0) out << "\n";
      report_block(out, record, i);
    }
  }
  if (record.sweep) {
    const auto& s = record.sweep;
    out << "phi_D* " << general(s->phi_d_star, 8) << "   phi_A* " << general(s->phi_a_star, 8) << "\n";
    out << std::right << std::setw(10) << "a" << std::setw(10) << "eff_D" << std::setw(10) << "eff_A"
        << std::setw(12) << "phi_D" << std::setw(12) << "phi_A" << std::setw(7) << "iter." << "  stop\n";
    for (const auto& r : s->rows) {
      out << std::setw(10) << general(r.a, 5) << std::setw(10) << fixed(r.eff_d, 4) << std::setw(10)
          << fixed(r.eff_a, 4) << std::setw(12) << general(r.phi_d, 6) << std::setw(12) << general(r.phi_a, 6)
          << std::setw(7) << r.iterations << "  " << to_string(r.stop_reason) << "\n";
    }
  }
  if (record.extended) {
    const auto& e = *record.extended;
    out << std::left << std::setw(12) << "kind" << e.kind << (e.k ? " (k = " + std::to_string(e.k) + ")" : "") << "\n";
    out << std::setw(12) << "objective" << general(e.objective, 12) << "\n";
    if (e.reference) out << std::setw(12) << "sum H xi" << general(*e.reference, 12) << "\n";
    if (e.phi) out << std::setw(12) << "phi(xi)" << general(*e.phi, 12) << "\n";
  }
  if (record.command != "validate") out << std::left << std::setw(12) << "time" << fixed(record.wall_time, 2) << " s\n";
}

void emit_csv(const RunRecord& record, std::ostream& out) {
  if (record.command == "validate") {
    out << "points,p\n" << record.labels.size() << "," << record.p << "\n";
    return;
  }
  if (record.ek && record.command == "ek-sweep") {
    out << "k,value,iterations,stop_reason\n";
    for (std::size_t k = 0; k < record.ek->values.size(); ++k)
      out << k + 1 << "," << exact(record.ek->values[k]) << "," << record.reports[k].iterations << ","
          << to_string(record.reports[k].stop_reason) << "\n";
    return;
  }
  if (record.sweep) {
    out << "a,eff_d,eff_a,phi_d,phi_a,iterations,stop_reason,error\n";
    for (const auto& r : record.sweep->rows)
      out << exact(r.a) << "," << exact(r.eff_d) << "," << exact(r.eff_a) << "," << exact(r.phi_d) << ","
          << exact(r.phi_a) << "," << r.iterations << "," << to_string(r.stop_reason) << "," << csv_field(r.error)
          << "\n";
    return;
  }
  if (record.extended) {
    const auto& e = *record.extended;
    out << "kind,k,objective,reference,phi\n";
    out << e.kind << "," << e.k << "," << exact(e.objective) << "," << (e.reference ? exact(*e.reference) : "")
        << "," << (e.phi ? exact(*e.phi) : "") << "\n";
    return;
  }
  out << "report,criterion,index,label,weight\n";
  for (std::size_t r = 0; r < record.reports.size(); ++r) {
    const auto& rep = record.reports[r];
    for (std::size_t i = 0; i < rep.design.size(); ++i)
      out << r << "," << csv_field(rep.criterion) << "," << i << "," << csv_field(record.labels[i]) << ","
          << exact(rep.design[i]) << "\n";
  }
}

void emit(const RunRecord& record, const std::string& format, std::ostream& out) {
  if (format == "table") emit_table(record, out);
  else if (format == "csv") emit_csv(record, out);
  else if (format == "json") out << to_json(record) << "\n";
  else throw std::invalid_argument("unknown output format '" + format + "'");
}

}  // namespace optdesign::cli
