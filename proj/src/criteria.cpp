#include "optdesign/criteria.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "optdesign/parallel.hpp"

namespace optdesign {

Criterion Criterion::ek(std::size_t k) {
  if (k == 0) throw std::invalid_argument("E_k needs k >= 1");
  return {Kind::Ek, k, {}};
}

Criterion Criterion::maximin(Vector normalizers) {
  for (double v : normalizers)
    if (!(v > 0.0)) throw std::invalid_argument("maximin normalizers must be positive");
  return {Kind::MaximinEff, 0, std::move(normalizers)};
}

void Criterion::validate(std::size_t p) const {
  if (kind == Kind::Ek && (k < 1 || k > p))
    throw std::invalid_argument("E_k needs 1 <= k <= p (k=" + std::to_string(k) + ", p=" + std::to_string(p) + ")");
  if (kind == Kind::MaximinEff) {
    if (normalizers.size() != p) throw std::invalid_argument("maximin needs one normalizer per eigenvalue");
    for (double v : normalizers)
      if (!(v > 0.0)) throw std::invalid_argument("maximin normalizers must be positive");
  }
}

std::string Criterion::name() const {
  switch (kind) {
    case Kind::D: return "D";
    case Kind::A: return "A";
    case Kind::Ek: return "E" + std::to_string(k);
    case Kind::MaximinEff: return "maximin";
  }
  return "?";
}

Criterion parse_criterion(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "D") return Criterion::d();
  if (s == "A") return Criterion::a();
  std::string digits;
  if (s.rfind("EK:", 0) == 0) digits = s.substr(3);
  else if (s.rfind("E_", 0) == 0) digits = s.substr(2);
  else if (s.size() > 1 && s[0] == 'E') digits = s.substr(1);
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const auto k = std::stoul(digits);
    if (k >= 1) return Criterion::ek(k);
  }
  throw std::invalid_argument("unknown criterion '" + text + "' (expected D, A or E<k>)");
}

InfoMatrix::InfoMatrix(SymMatrix m) : m_(std::move(m)), spectral_(sym_eig(m_)) {}

InfoMatrix InfoMatrix::regularized(double gamma) const {
  SymMatrix r = m_;
  r.add_identity(gamma);
  return InfoMatrix(std::move(r));
}

InfoMatrix InfoMatrix::regularized_if_singular(double gamma) const {
  if (!near_singular()) return *this;
  return regularized(gamma * std::max(1.0, spectral_.lambda_max()));
}

InfoMatrix info_matrix(const DesignSpace& space, std::span<const double> weights) {
  if (weights.size() != space.size()) throw std::invalid_argument("design does not match the design space");
  SymMatrix m(space.dim());
  for (std::size_t i = 0; i < space.size(); ++i)
    if (weights[i] != 0.0) m.add_outer(space.feature(i), weights[i]);
  return InfoMatrix(std::move(m));
}

InfoMatrix info_matrix(const DesignSpace& space, const Design& design) {
  return info_matrix(space, design.weights());
}

namespace {

double sum_smallest(const SpectralDecomp& eig, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += eig.eigenvalues[i];
  return s;
}

double trace_inverse(const SpectralDecomp& eig) {
  double s = 0.0;
  for (double l : eig.eigenvalues) s += 1.0 / l;
  return s;
}

}  // namespace

double phi(const Criterion& criterion, const InfoMatrix& info) {
  const auto& eig = info.spectral();
  criterion.validate(info.dim());
  switch (criterion.kind) {
    case Criterion::Kind::D:
      return det_root(eig);
    case Criterion::Kind::A:
      return info.near_singular() ? 0.0 : 1.0 / trace_inverse(eig);
    case Criterion::Kind::Ek:
      return sum_smallest(eig, criterion.k);
    case Criterion::Kind::MaximinEff: {
      const Vector eff = efficiencies(info, criterion.normalizers);
      return *std::min_element(eff.begin(), eff.end());
    }
  }
  return 0.0;
}

double phi(const Criterion& criterion, const DesignSpace& space, const Design& design) {
  return phi(criterion, info_matrix(space, design));
}

double phi(const Criterion& criterion, const DesignSpace& space, std::span<const double> weights) {
  return phi(criterion, info_matrix(space, weights));
}

Vector efficiencies(const InfoMatrix& info, std::span<const double> normalizers) {
  const auto& eig = info.spectral();
  if (normalizers.size() != eig.dim()) throw std::invalid_argument("one normalizer per eigenvalue is required");
  Vector eff(eig.dim());
  double running = 0.0;
  for (std::size_t k = 0; k < eig.dim(); ++k) {
    running += eig.eigenvalues[k];
    eff[k] = running / normalizers[k];
  }
  return eff;
}

double Cut::evaluate(std::span<const double> weights) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * weights[i];
  return s;
}

namespace {

// Fills per-point coefficients from the projections z = U^T f(x).
template <typename PerPoint>
void assemble(const DesignSpace& space, const SpectralDecomp& eig, std::vector<Vector*> outputs,
              PerPoint per_point) {
  const std::size_t p = space.dim();
  parallel_for(space.size(), [&](std::size_t begin, std::size_t end) {
    Vector z(p);
    for (std::size_t x = begin; x < end; ++x) {
      const auto f = space.feature(x);
      for (std::size_t i = 0; i < p; ++i) {
        const auto& u = eig.eigenvectors[i];
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += u[j] * f[j];
        z[i] = s;
      }
      per_point(x, z, outputs);
    }
  });
}

}  // namespace

Cut cut(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& mu) {
  if (criterion.kind == Criterion::Kind::MaximinEff)
    throw std::invalid_argument("maximin criteria contribute several cuts; use cuts()");
  criterion.validate(space.dim());
  if (mu.dim() != space.dim()) throw std::invalid_argument("information matrix does not match the space");
  const auto& eig = mu.spectral();
  const std::size_t p = space.dim();

  Cut out;
  out.kind = criterion.kind;
  out.k = criterion.k;
  out.coefficients.assign(space.size(), 0.0);
  Vector* target = &out.coefficients;

  switch (criterion.kind) {
    case Criterion::Kind::D: {
      if (mu.near_singular()) throw NearSingular(eig.lambda_min(), eig.lambda_max());
      const double scale = det_root(eig) / static_cast<double>(p);
      Vector inv(p);
      for (std::size_t i = 0; i < p; ++i) inv[i] = 1.0 / eig.eigenvalues[i];
      assemble(space, eig, {target}, [&](std::size_t x, const Vector& z, std::vector<Vector*>& o) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += z[i] * z[i] * inv[i];
        (*o[0])[x] = scale * s;
      });
      break;
    }
    case Criterion::Kind::A: {
      if (mu.near_singular()) throw NearSingular(eig.lambda_min(), eig.lambda_max());
      Vector inv2(p);
      double tr = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        inv2[i] = 1.0 / (eig.eigenvalues[i] * eig.eigenvalues[i]);
        tr += 1.0 / eig.eigenvalues[i];
      }
      const double denom = tr * tr;
      assemble(space, eig, {target}, [&](std::size_t x, const Vector& z, std::vector<Vector*>& o) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += z[i] * z[i] * inv2[i];
        (*o[0])[x] = s / denom;
      });
      break;
    }
    case Criterion::Kind::Ek: {
      const std::size_t k = criterion.k;
      assemble(space, eig, {target}, [&](std::size_t x, const Vector& z, std::vector<Vector*>& o) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += z[i] * z[i];
        (*o[0])[x] = s;
      });
      break;
    }
    case Criterion::Kind::MaximinEff:
      break;
  }
  return out;
}

Cut cut(const Criterion& criterion, const DesignSpace& space, const Design& mu) {
  return cut(criterion, space, info_matrix(space, mu));
}

std::vector<Cut> cuts(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& mu) {
  if (criterion.kind != Criterion::Kind::MaximinEff) return {cut(criterion, space, mu)};
  criterion.validate(space.dim());
  const std::size_t p = space.dim();
  std::vector<Cut> out(p);
  std::vector<Vector*> targets;
  for (std::size_t k = 0; k < p; ++k) {
    out[k].kind = Criterion::Kind::Ek;
    out[k].k = k + 1;
    out[k].normalizer = criterion.normalizers[k];
    out[k].coefficients.assign(space.size(), 0.0);
    targets.push_back(&out[k].coefficients);
  }
  assemble(space, mu.spectral(), targets, [&](std::size_t x, const Vector& z, std::vector<Vector*>& o) {
    double running = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      running += z[k] * z[k];
      (*o[k])[x] = running / criterion.normalizers[k];
    }
  });
  return out;
}

void Prior::validate() const {
  if (spaces.empty() || spaces.size() != weights.size())
    throw std::invalid_argument("prior needs one weight per linearization");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("prior weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("prior weights must sum to one");
  for (const auto& s : spaces) {
    if (s.size() != spaces.front().size() || s.dim() != spaces.front().dim())
      throw std::invalid_argument("prior linearizations must share one point list");
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.label(i) != spaces.front().label(i))
        throw std::invalid_argument("prior linearizations must share one point list");
  }
}

Cut ave_cut(const Criterion& base, const Prior& prior, const Design& mu, double gamma) {
  prior.validate();
  if (base.kind == Criterion::Kind::MaximinEff)
    throw std::invalid_argument("averaged criteria are built on D, A or E_k");
  Cut out;
  out.kind = base.kind;
  out.k = base.k;
  out.coefficients.assign(prior.spaces.front().size(), 0.0);
  for (std::size_t a = 0; a < prior.spaces.size(); ++a) {
    if (prior.weights[a] == 0.0) continue;
    InfoMatrix info = info_matrix(prior.spaces[a], mu);
    if (gamma > 0.0 && base.kind != Criterion::Kind::Ek) info = info.regularized_if_singular(gamma);
    const Cut c = cut(base, prior.spaces[a], info);
    for (std::size_t i = 0; i < c.coefficients.size(); ++i)
      out.coefficients[i] += prior.weights[a] * c.coefficients[i];
  }
  return out;
}

double ave_phi(const Criterion& base, const Prior& prior, const Design& design) {
  prior.validate();
  double s = 0.0;
  for (std::size_t a = 0; a < prior.spaces.size(); ++a)
    if (prior.weights[a] != 0.0) s += prior.weights[a] * phi(base, prior.spaces[a], design);
  return s;
}

EquivalenceGap equivalence_gap(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& info) {
  criterion.validate(space.dim());
  const auto& eig = info.spectral();
  const std::size_t p = space.dim();
  EquivalenceGap gap;
  switch (criterion.kind) {
    case Criterion::Kind::D: {
      if (info.near_singular()) throw NearSingular(eig.lambda_min(), eig.lambda_max());
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < space.size(); ++x) {
        const Vector z = eig.project(space.feature(x));
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += z[i] * z[i] / eig.eigenvalues[i];
        best = std::max(best, s);
      }
      gap.value = std::abs(best - static_cast<double>(p));
      break;
    }
    case Criterion::Kind::A: {
      if (info.near_singular()) throw NearSingular(eig.lambda_min(), eig.lambda_max());
      double tr = 0.0;
      for (double l : eig.eigenvalues) tr += 1.0 / l;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < space.size(); ++x) {
        const Vector z = eig.project(space.feature(x));
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += z[i] * z[i] / (eig.eigenvalues[i] * eig.eigenvalues[i]);
        best = std::max(best, s);
      }
      gap.value = std::abs(best - tr);
      break;
    }
    case Criterion::Kind::Ek: {
      const std::size_t k = criterion.k;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t x = 0; x < space.size(); ++x) {
        const Vector z = eig.project(space.feature(x));
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += z[i] * z[i];
        best = std::max(best, s);
      }
      gap.value = std::abs(sum_smallest(eig, k) - best);
      if (k < p) {
        const double lk = eig.eigenvalues[k - 1];
        const double lk1 = eig.eigenvalues[k];
        gap.reliable = (lk1 - lk) > 1e-8 * std::max(1.0, std::abs(lk1));
      }
      break;
    }
    case Criterion::Kind::MaximinEff:
      gap.value = std::numeric_limits<double>::quiet_NaN();
      gap.reliable = false;
      break;
  }
  return gap;
}

EquivalenceGap equivalence_gap(const Criterion& criterion, const DesignSpace& space, const Design& design) {
  return equivalence_gap(criterion, space, info_matrix(space, design));
}

}  // namespace optdesign
