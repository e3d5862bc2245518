#include "optdesign/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace optdesign {

std::string to_string(LPStatus status) {
  switch (status) {
    case LPStatus::Optimal: return "Optimal";
    case LPStatus::Infeasible: return "Infeasible";
    case LPStatus::Unbounded: return "Unbounded";
    case LPStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

void CutLP::validate() const {
  if (n_points == 0) throw std::invalid_argument("LP needs at least one design point");
  if (objective_cuts.empty()) throw std::invalid_argument("LP needs at least one objective cut");
  auto check = [&](const Vector& row) {
    if (row.size() != n_points) throw std::invalid_argument("cut length does not match the design space");
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument("cut coefficients must be finite");
  };
  for (const auto& h : objective_cuts) check(h);
  for (const auto& l : level_cuts) {
    check(l.coefficients);
    if (!std::isfinite(l.threshold)) throw std::invalid_argument("level threshold must be finite");
  }
  for (const auto& e : equality_rows) {
    check(e.coefficients);
    if (!std::isfinite(e.rhs)) throw std::invalid_argument("equality right-hand side must be finite");
  }
}

namespace {

// ---------------------------------------------------------------------------
// Dense two-phase revised simplex for the small working LPs.
// ---------------------------------------------------------------------------

enum class Sense { Le, Eq, Ge };

struct DenseLP {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> a;  // column-major, m x n
  Vector b;
  std::vector<Sense> sense;
  Vector c;  // maximize c^T x
  // Columns 0 and 1 are the two halves of a free variable.
  bool split_free = false;
};

struct DenseResult {
  LPStatus status = LPStatus::IterLimit;
  Vector x;
  // Duals on the caller's rows: reduced cost of column j is
  // c_j - sum_i y_i a_ij (phase 2) or -sum_i y_i a_ij (phase-1 certificate).
  Vector y;
  std::size_t pivots = 0;
};

constexpr double kDualTol = 1e-12;
constexpr double kPivotTol = 1e-9;
constexpr double kHarrisDelta = 1e-13;
constexpr double kFeasTol = 1e-10;
constexpr std::size_t kReinvertEvery = 40;
constexpr std::size_t kBlandAfter = 50;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class RevisedSimplex {
 public:
  explicit RevisedSimplex(const DenseLP& lp) : m_(lp.m), n_(lp.n), split_free_(lp.split_free) {
    sigma_.assign(m_, 1.0);
    rhs_ = lp.b;
    std::size_t slacks = 0;
    for (auto s : lp.sense) slacks += s != Sense::Eq;
    std::vector<double> slack_sign(m_, 0.0);
    std::vector<bool> needs_art(m_, false);
    for (std::size_t i = 0; i < m_; ++i) {
      if (lp.b[i] < 0.0) {
        sigma_[i] = -1.0;
        rhs_[i] = -lp.b[i];
      }
      if (lp.sense[i] == Sense::Le) slack_sign[i] = sigma_[i];
      if (lp.sense[i] == Sense::Ge) slack_sign[i] = -sigma_[i];
      needs_art[i] = slack_sign[i] <= 0.0;
    }
    const std::size_t arts = static_cast<std::size_t>(std::count(needs_art.begin(), needs_art.end(), true));
    total_ = n_ + slacks + arts;
    cols_.assign(m_ * total_, 0.0);
    cost2_.assign(total_, 0.0);
    cost1_.assign(total_, 0.0);
    artificial_.assign(total_, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      for (std::size_t i = 0; i < m_; ++i) cols_[j * m_ + i] = sigma_[i] * lp.a[j * m_ + i];
      cost2_[j] = lp.c[j];
    }
    basis_.assign(m_, kNone);
    std::size_t next = n_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (slack_sign[i] == 0.0) continue;
      cols_[next * m_ + i] = slack_sign[i];
      if (slack_sign[i] > 0.0) basis_[i] = next;
      ++next;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (!needs_art[i]) continue;
      cols_[next * m_ + i] = 1.0;
      artificial_[next] = 1;
      cost1_[next] = -1.0;
      basis_[i] = next;
      ++next;
    }
    pos_.assign(total_, kNone);
    for (std::size_t i = 0; i < m_; ++i) pos_[basis_[i]] = i;
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    xb_ = rhs_;
    has_artificials_ = arts > 0;
  }

  DenseResult run(std::size_t pivot_limit) {
    DenseResult out;
    limit_ = pivot_limit;
    if (has_artificials_) {
      const LPStatus s1 = phase(cost1_);
      if (s1 == LPStatus::IterLimit) {
        out.status = s1;
        out.pivots = pivots_;
        return out;
      }
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (artificial_[basis_[i]]) infeas += std::max(0.0, xb_[i]);
      if (infeas > kFeasTol) {
        out.status = LPStatus::Infeasible;
        out.y = duals(cost1_);
        out.x = primal();
        out.pivots = pivots_;
        return out;
      }
      drive_out_artificials();
    }
    out.status = phase(cost2_);
    out.x = primal();
    out.y = duals(cost2_);
    out.pivots = pivots_;
    return out;
  }

 private:
  const double* col(std::size_t j) const { return cols_.data() + j * m_; }

  Vector ftran(std::size_t j) const {
    Vector w(m_, 0.0);
    const double* cj = col(j);
    for (std::size_t k = 0; k < m_; ++k) {
      const double v = cj[k];
      if (v == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) w[i] += binv_[i * m_ + k] * v;
    }
    return w;
  }

  Vector standard_duals(const Vector& cost) const {
    Vector y(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) y[k] += cb * binv_[i * m_ + k];
    }
    return y;
  }

  Vector duals(const Vector& cost) const {
    Vector y = standard_duals(cost);
    for (std::size_t i = 0; i < m_; ++i) y[i] *= sigma_[i];
    return y;
  }

  Vector primal() const {
    Vector x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = std::max(0.0, xb_[i]);
    return x;
  }

  void reinvert() {
    std::vector<double> b(m_ * m_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < m_; ++k) b[k * m_ + i] = col(basis_[i])[k];
    // Gauss-Jordan with partial pivoting on [B | I].
    std::vector<double> inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < m_; ++r)
        if (std::abs(b[r * m_ + c]) > std::abs(b[piv * m_ + c])) piv = r;
      if (std::abs(b[piv * m_ + c]) < 1e-300) throw std::runtime_error("simplex basis became singular");
      if (piv != c) {
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(b[piv * m_ + k], b[c * m_ + k]);
          std::swap(inv[piv * m_ + k], inv[c * m_ + k]);
        }
      }
      const double d = b[c * m_ + c];
      for (std::size_t k = 0; k < m_; ++k) {
        b[c * m_ + k] /= d;
        inv[c * m_ + k] /= d;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = b[r * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          b[r * m_ + k] -= f * b[c * m_ + k];
          inv[r * m_ + k] -= f * inv[c * m_ + k];
        }
      }
    }
    binv_ = std::move(inv);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < m_; ++k) s += binv_[i * m_ + k] * rhs_[k];
      xb_[i] = s;
    }
    since_reinvert_ = 0;
  }

  void pivot(std::size_t r, std::size_t q, const Vector& w) {
    const double wr = w[r];
    const double theta = xb_[r] / wr;
    for (std::size_t i = 0; i < m_; ++i)
      if (i != r) xb_[i] -= theta * w[i];
    xb_[r] = theta;
    double* row_r = binv_.data() + r * m_;
    for (std::size_t k = 0; k < m_; ++k) row_r[k] /= wr;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || w[i] == 0.0) continue;
      double* row_i = binv_.data() + i * m_;
      const double f = w[i];
      for (std::size_t k = 0; k < m_; ++k) row_i[k] -= f * row_r[k];
    }
    pos_[basis_[r]] = kNone;
    basis_[r] = q;
    pos_[q] = r;
    ++pivots_;
    if (++since_reinvert_ >= kReinvertEvery) reinvert();
  }

  std::size_t choose_entering(const Vector& cost, bool bland) const {
    const Vector y = standard_duals(cost);
    std::size_t best = kNone;
    double best_d = kDualTol;
    for (std::size_t j = 0; j < total_; ++j) {
      if (pos_[j] != kNone || artificial_[j]) continue;
      if (split_free_ && j < 2 && pos_[1 - j] != kNone) continue;
      const double* cj = col(j);
      double d = cost[j];
      for (std::size_t i = 0; i < m_; ++i) d -= y[i] * cj[i];
      if (d > best_d) {
        best = j;
        best_d = d;
        if (bland) break;
      }
    }
    return best;
  }

  std::size_t choose_leaving(const Vector& w, bool bland) const {
    std::size_t best = kNone;
    if (bland) {
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (w[i] <= kPivotTol) continue;
        const double ratio = std::max(0.0, xb_[i]) / w[i];
        if (ratio < best_ratio - 1e-15 ||
            (ratio <= best_ratio + 1e-15 && best != kNone && basis_[i] < basis_[best])) {
          best = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
      return best;
    }
    double theta_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m_; ++i)
      if (w[i] > kPivotTol) theta_max = std::min(theta_max, (std::max(0.0, xb_[i]) + kHarrisDelta) / w[i]);
    for (std::size_t i = 0; i < m_; ++i) {
      if (w[i] <= kPivotTol) continue;
      if (std::max(0.0, xb_[i]) / w[i] > theta_max) continue;
      if (best == kNone || w[i] > w[best] || (w[i] == w[best] && basis_[i] < basis_[best])) best = i;
    }
    return best;
  }

  LPStatus phase(const Vector& cost) {
    std::size_t degenerate = 0;
    int refreshes = 0;
    for (;;) {
      if (pivots_ >= limit_) return LPStatus::IterLimit;
      const bool bland = degenerate > kBlandAfter;
      std::size_t q = choose_entering(cost, bland);
      if (q == kNone) {
        if (since_reinvert_ == 0 || refreshes > 3) return LPStatus::Optimal;
        reinvert();
        ++refreshes;
        continue;
      }
      const Vector w = ftran(q);
      const std::size_t r = choose_leaving(w, bland);
      if (r == kNone) {
        if (since_reinvert_ == 0 || refreshes > 3) return LPStatus::Unbounded;
        reinvert();
        ++refreshes;
        continue;
      }
      const double theta = std::max(0.0, xb_[r]) / w[r];
      degenerate = theta <= 1e-14 ? degenerate + 1 : 0;
      if (xb_[r] < 0.0) xb_[r] = 0.0;
      pivot(r, q, w);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (!artificial_[basis_[r]]) continue;
      const double* row_r = binv_.data() + r * m_;
      std::size_t best = kNone;
      double best_alpha = 1e-9;
      for (std::size_t j = 0; j < total_; ++j) {
        if (pos_[j] != kNone || artificial_[j]) continue;
        const double* cj = col(j);
        double alpha = 0.0;
        for (std::size_t k = 0; k < m_; ++k) alpha += row_r[k] * cj[k];
        if (std::abs(alpha) > best_alpha) {
          best_alpha = std::abs(alpha);
          best = j;
        }
      }
      if (best == kNone) continue;  // redundant row; the artificial stays basic at zero
      xb_[r] = 0.0;
      pivot(r, best, ftran(best));
    }
  }

  std::size_t m_, n_, total_ = 0;
  bool split_free_ = false;
  std::vector<double> cols_;
  Vector rhs_;
  Vector sigma_;
  Vector cost1_, cost2_;
  std::vector<char> artificial_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> pos_;
  std::vector<double> binv_;
  Vector xb_;
  bool has_artificials_ = false;
  std::size_t pivots_ = 0;
  std::size_t since_reinvert_ = 0;
  std::size_t limit_ = 0;
};

double max_abs(const Vector& v, std::size_t* argmax) {
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (argmax) *argmax = arg;
  return best;
}

std::size_t argmax_value(const Vector& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void insert_sorted(std::vector<std::size_t>& set, std::size_t v) {
  auto it = std::lower_bound(set.begin(), set.end(), v);
  if (it == set.end() || *it != v) set.insert(it, v);
}

constexpr std::size_t kInitialRowCap = 64;
constexpr std::size_t kAddPerRound = 32;
constexpr std::size_t kMaxRounds = 10000;

}  // namespace

CutLPSolver::CutLPSolver(std::size_t n_points) {
  if (n_points == 0) throw std::invalid_argument("LP needs at least one design point");
  problem_.n_points = n_points;
}

std::size_t CutLPSolver::add_objective_cut(Vector coefficients) {
  if (coefficients.size() != problem_.n_points) throw std::invalid_argument("cut length does not match the design space");
  RowScale s;
  const double m = max_abs(coefficients, nullptr);
  s.scale = m > 0.0 ? 1.0 / m : 1.0;
  s.argmax = argmax_value(coefficients);
  for (double v : coefficients)
    if (!std::isfinite(v)) throw std::invalid_argument("cut coefficients must be finite");
  problem_.objective_cuts.push_back(std::move(coefficients));
  obj_scale_.push_back(s);
  return problem_.objective_cuts.size() - 1;
}

std::size_t CutLPSolver::add_level_cut(Vector coefficients, double threshold) {
  if (coefficients.size() != problem_.n_points) throw std::invalid_argument("cut length does not match the design space");
  for (double v : coefficients)
    if (!std::isfinite(v)) throw std::invalid_argument("cut coefficients must be finite");
  RowScale s;
  const double m = std::max(max_abs(coefficients, nullptr), std::abs(threshold));
  s.scale = m > 0.0 ? 1.0 / m : 1.0;
  s.argmax = argmax_value(coefficients);
  problem_.level_cuts.push_back({std::move(coefficients), threshold});
  lvl_scale_.push_back(s);
  return problem_.level_cuts.size() - 1;
}

void CutLPSolver::add_equality(Vector coefficients, double rhs) {
  if (coefficients.size() != problem_.n_points) throw std::invalid_argument("row length does not match the design space");
  const double m = std::max(max_abs(coefficients, nullptr), std::abs(rhs));
  problem_.equality_rows.push_back({std::move(coefficients), rhs});
  eq_scale_.push_back(m > 0.0 ? 1.0 / m : 1.0);
}

LPSolution CutLPSolver::solve() {
  const std::size_t n = problem_.n_points;
  const auto& obj = problem_.objective_cuts;
  const auto& lvl = problem_.level_cuts;
  const auto& eqs = problem_.equality_rows;
  if (obj.empty()) throw std::invalid_argument("LP needs at least one objective cut");

  // Reference design for picking the initial working rows.
  Vector ref = have_last_ ? last_xi_ : Vector(n, 1.0 / static_cast<double>(n));
  auto value_at = [&](const Vector& row) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (ref[i] != 0.0) s += row[i] * ref[i];
    return s;
  };

  // Working rows: rows that were active last time plus the new ones.
  auto seed_rows = [&](std::vector<std::size_t>& active, std::size_t& seen, std::size_t total,
                       auto&& value_of) {
    std::vector<std::size_t> fresh;
    for (std::size_t j = seen; j < total; ++j) fresh.push_back(j);
    if (fresh.size() > kInitialRowCap) {
      std::stable_sort(fresh.begin(), fresh.end(),
                       [&](std::size_t l, std::size_t r) { return value_of(l) < value_of(r); });
      fresh.resize(kInitialRowCap);
    }
    for (std::size_t j : fresh) insert_sorted(active, j);
    seen = total;
  };
  seed_rows(active_obj_, seen_obj_, obj.size(),
            [&](std::size_t j) { return value_at(obj[j]) * obj_scale_[j].scale; });
  seed_rows(active_lvl_, seen_lvl_, lvl.size(), [&](std::size_t l) {
    return (value_at(lvl[l].coefficients) - lvl[l].threshold) * lvl_scale_[l].scale;
  });

  // Working columns: previous support plus the best point of each working row.
  std::vector<std::size_t> cols;
  if (have_last_)
    for (std::size_t i = 0; i < n; ++i)
      if (last_xi_[i] > 0.0) cols.push_back(i);
  for (std::size_t j : active_obj_) insert_sorted(cols, obj_scale_[j].argmax);
  for (std::size_t l : active_lvl_) insert_sorted(cols, lvl_scale_[l].argmax);
  if (n <= 2 * kAddPerRound) {
    cols.resize(n);
    std::iota(cols.begin(), cols.end(), 0);
  }

  LPSolution sol;
  sol.dual_values.assign(obj.size() + lvl.size() + 1 + eqs.size(), 0.0);

  for (std::size_t round = 0; round < kMaxRounds; ++round) {
    sol.rounds = round + 1;
    const std::size_t n_obj = active_obj_.size();
    const std::size_t n_lvl = active_lvl_.size();
    DenseLP lp;
    lp.m = n_obj + n_lvl + 1 + eqs.size();
    lp.n = 2 + cols.size();
    lp.a.assign(lp.m * lp.n, 0.0);
    lp.b.assign(lp.m, 0.0);
    lp.sense.assign(lp.m, Sense::Eq);
    lp.c.assign(lp.n, 0.0);
    lp.c[0] = 1.0;
    lp.c[1] = -1.0;
    lp.split_free = true;
    auto A = [&](std::size_t i, std::size_t j) -> double& { return lp.a[j * lp.m + i]; };
    std::size_t row = 0;
    for (std::size_t j : active_obj_) {
      const double s = obj_scale_[j].scale;
      A(row, 0) = s;
      A(row, 1) = -s;
      for (std::size_t c = 0; c < cols.size(); ++c) A(row, 2 + c) = -s * obj[j][cols[c]];
      lp.sense[row] = Sense::Le;
      ++row;
    }
    for (std::size_t l : active_lvl_) {
      const double s = lvl_scale_[l].scale;
      for (std::size_t c = 0; c < cols.size(); ++c) A(row, 2 + c) = s * lvl[l].coefficients[cols[c]];
      lp.b[row] = s * lvl[l].threshold;
      lp.sense[row] = Sense::Ge;
      ++row;
    }
    const std::size_t sum_row = row;
    for (std::size_t c = 0; c < cols.size(); ++c) A(row, 2 + c) = 1.0;
    lp.b[row] = 1.0;
    ++row;
    for (std::size_t r = 0; r < eqs.size(); ++r, ++row) {
      const double s = eq_scale_[r];
      for (std::size_t c = 0; c < cols.size(); ++c) A(row, 2 + c) = s * eqs[r].coefficients[cols[c]];
      lp.b[row] = s * eqs[r].rhs;
    }

    RevisedSimplex simplex(lp);
    const DenseResult res = simplex.run(50 * (lp.m + lp.n + lp.m));
    sol.pivots += res.pivots;
    if (res.status == LPStatus::IterLimit || res.status == LPStatus::Unbounded) {
      sol.status = res.status;
      return sol;
    }

    // Row duals in unscaled units.
    Vector y_obj(n_obj), y_lvl(n_lvl), y_eq(eqs.size());
    for (std::size_t r = 0; r < n_obj; ++r) y_obj[r] = res.y[r] * obj_scale_[active_obj_[r]].scale;
    for (std::size_t r = 0; r < n_lvl; ++r) y_lvl[r] = res.y[n_obj + r] * lvl_scale_[active_lvl_[r]].scale;
    const double y_sum = res.y[sum_row];
    for (std::size_t r = 0; r < eqs.size(); ++r) y_eq[r] = res.y[sum_row + 1 + r] * eq_scale_[r];

    const bool infeasible = res.status == LPStatus::Infeasible;
    double t = 0.0;
    Vector xi(n, 0.0);
    if (!infeasible) {
      t = res.x[0] - res.x[1];
      double total = 0.0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        xi[cols[c]] = res.x[2 + c];
        total += res.x[2 + c];
      }
      if (total > 0.0)
        for (double& v : xi) v /= total;
    }

    // Column pricing over points outside the working set.
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    std::vector<std::pair<double, std::size_t>> entering;
    {
      std::vector<char> in_cols(n, 0);
      for (std::size_t c : cols) in_cols[c] = 1;
      for (std::size_t x = 0; x < n; ++x) {
        if (in_cols[x]) continue;
        double d = 0.0;
        for (std::size_t r = 0; r < n_obj; ++r)
          if (y_obj[r] != 0.0) d += y_obj[r] * obj[active_obj_[r]][x];
        for (std::size_t r = 0; r < n_lvl; ++r)
          if (y_lvl[r] != 0.0) d -= y_lvl[r] * lvl[active_lvl_[r]].coefficients[x];
        d -= y_sum;
        for (std::size_t r = 0; r < eqs.size(); ++r)
          if (y_eq[r] != 0.0) d -= y_eq[r] * eqs[r].coefficients[x];
        if (d > tol) entering.emplace_back(d, x);
      }
    }
    std::stable_sort(entering.begin(), entering.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    if (entering.size() > kAddPerRound) entering.resize(kAddPerRound);

    if (infeasible) {
      if (entering.empty()) {
        sol.status = LPStatus::Infeasible;
        return sol;
      }
      for (const auto& e : entering) insert_sorted(cols, e.second);
      continue;
    }

    // Row separation over cuts outside the working set.
    std::vector<std::pair<double, std::size_t>> viol_obj, viol_lvl;
    {
      std::vector<std::size_t> support;
      for (std::size_t c : cols)
        if (xi[c] > 0.0) support.push_back(c);
      auto dot = [&](const Vector& row) {
        double s = 0.0;
        for (std::size_t i : support) s += row[i] * xi[i];
        return s;
      };
      std::size_t a = 0;
      for (std::size_t j = 0; j < obj.size(); ++j) {
        if (a < active_obj_.size() && active_obj_[a] == j) {
          ++a;
          continue;
        }
        const double v = (t - dot(obj[j])) * obj_scale_[j].scale;
        if (v > 1e-12 * std::max(1.0, std::abs(t) * obj_scale_[j].scale)) viol_obj.emplace_back(v, j);
      }
      a = 0;
      for (std::size_t l = 0; l < lvl.size(); ++l) {
        if (a < active_lvl_.size() && active_lvl_[a] == l) {
          ++a;
          continue;
        }
        const double v = (lvl[l].threshold - dot(lvl[l].coefficients)) * lvl_scale_[l].scale;
        if (v > 1e-12) viol_lvl.emplace_back(v, l);
      }
    }
    auto by_violation = [](const auto& l, const auto& r) { return l.first > r.first; };
    std::stable_sort(viol_obj.begin(), viol_obj.end(), by_violation);
    std::stable_sort(viol_lvl.begin(), viol_lvl.end(), by_violation);
    if (viol_obj.size() > kAddPerRound) viol_obj.resize(kAddPerRound);
    if (viol_lvl.size() > kAddPerRound) viol_lvl.resize(kAddPerRound);

    if (entering.empty() && viol_obj.empty() && viol_lvl.empty()) {
      sol.status = LPStatus::Optimal;
      sol.t_star = t;
      sol.xi = xi;
      for (std::size_t r = 0; r < n_obj; ++r) sol.dual_values[active_obj_[r]] = y_obj[r];
      for (std::size_t r = 0; r < n_lvl; ++r) sol.dual_values[obj.size() + active_lvl_[r]] = y_lvl[r];
      sol.dual_values[obj.size() + lvl.size()] = y_sum;
      for (std::size_t r = 0; r < eqs.size(); ++r) sol.dual_values[obj.size() + lvl.size() + 1 + r] = y_eq[r];

      // Carry the rows that matter into the next solve.
      std::vector<std::size_t> keep_obj, keep_lvl;
      for (std::size_t r = 0; r < n_obj; ++r) {
        const std::size_t j = active_obj_[r];
        double v = 0.0;
        for (std::size_t c : cols) v += obj[j][c] * xi[c];
        if (y_obj[r] != 0.0 || (v - t) * obj_scale_[j].scale <= 1e-9) keep_obj.push_back(j);
      }
      for (std::size_t r = 0; r < n_lvl; ++r) {
        const std::size_t l = active_lvl_[r];
        double v = 0.0;
        for (std::size_t c : cols) v += lvl[l].coefficients[c] * xi[c];
        if (y_lvl[r] != 0.0 || (v - lvl[l].threshold) * lvl_scale_[l].scale <= 1e-9) keep_lvl.push_back(l);
      }
      active_obj_ = std::move(keep_obj);
      active_lvl_ = std::move(keep_lvl);
      last_xi_ = xi;
      last_t_ = t;
      have_last_ = true;
      return sol;
    }
    for (const auto& e : entering) insert_sorted(cols, e.second);
    for (const auto& v : viol_obj) {
      insert_sorted(active_obj_, v.second);
      insert_sorted(cols, obj_scale_[v.second].argmax);
    }
    for (const auto& v : viol_lvl) {
      insert_sorted(active_lvl_, v.second);
      insert_sorted(cols, lvl_scale_[v.second].argmax);
    }
  }
  sol.status = LPStatus::IterLimit;
  return sol;
}

LPSolution solve_lp(const CutLP& problem) {
  problem.validate();
  CutLPSolver solver(problem.n_points);
  for (const auto& h : problem.objective_cuts) solver.add_objective_cut(h);
  for (const auto& l : problem.level_cuts) solver.add_level_cut(l.coefficients, l.threshold);
  for (const auto& e : problem.equality_rows) solver.add_equality(e.coefficients, e.rhs);
  return solver.solve();
}

std::string dump_lp(const CutLP& problem) {
  std::ostringstream os;
  os.precision(17);
  os << "maximize t\nsubject to\n";
  auto terms = [&](const Vector& row) {
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] != 0.0) os << (row[i] < 0.0 ? " - " : " + ") << std::abs(row[i]) << " x" << i;
  };
  for (std::size_t j = 0; j < problem.objective_cuts.size(); ++j) {
    os << "  cut" << j << ":";
    terms(problem.objective_cuts[j]);
    os << " - t >= 0\n";
  }
  for (std::size_t l = 0; l < problem.level_cuts.size(); ++l) {
    os << "  level" << l << ":";
    terms(problem.level_cuts[l].coefficients);
    os << " >= " << problem.level_cuts[l].threshold << "\n";
  }
  for (std::size_t r = 0; r < problem.equality_rows.size(); ++r) {
    os << "  eq" << r << ":";
    terms(problem.equality_rows[r].coefficients);
    os << " = " << problem.equality_rows[r].rhs << "\n";
  }
  os << "  simplex:";
  for (std::size_t i = 0; i < problem.n_points; ++i) os << " + x" << i;
  os << " = 1\n";
  os << "bounds\n  x >= 0, t free\nend\n";
  return os.str();
}

}  // namespace optdesign
