#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "optdesign/linalg.hpp"
#include "optdesign/model.hpp"

namespace optdesign {

/// An optimality criterion.  D, A and E_k are the local criteria; the
/// maximin kind takes the minimum over k of phi_Ek / normalizers[k-1].
struct Criterion {
  enum class Kind { D, A, Ek, MaximinEff };

  Kind kind = Kind::D;
  std::size_t k = 0;
  Vector normalizers;

  static Criterion d() { return {Kind::D, 0, {}}; }
  static Criterion a() { return {Kind::A, 0, {}}; }
  static Criterion ek(std::size_t k);
  static Criterion maximin(Vector normalizers);

  /// Throws std::invalid_argument when k or the normalizers do not fit p.
  void validate(std::size_t p) const;
  std::string name() const;
};

/// Parses "D", "A", "E3", "E_3", "Ek:3".
Criterion parse_criterion(const std::string& text);

/// M(xi) = sum_x f(x) f(x)^T xi(x), with its spectrum.
class InfoMatrix {
 public:
  explicit InfoMatrix(SymMatrix m);

  const SymMatrix& matrix() const { return m_; }
  const SpectralDecomp& spectral() const { return spectral_; }
  std::size_t dim() const { return m_.dim(); }
  bool near_singular() const { return is_near_singular(spectral_); }
  /// M + gamma I
  InfoMatrix regularized(double gamma) const;
  /// M itself when nonsingular, else M + gamma * max(1, lambda_max) I.
  InfoMatrix regularized_if_singular(double gamma) const;

 private:
  SymMatrix m_;
  SpectralDecomp spectral_;
};

/// Accepts unnormalized nonnegative weights (used for homogeneity checks).
InfoMatrix info_matrix(const DesignSpace& space, std::span<const double> weights);
InfoMatrix info_matrix(const DesignSpace& space, const Design& design);

double phi(const Criterion& criterion, const InfoMatrix& info);
double phi(const Criterion& criterion, const DesignSpace& space, const Design& design);
double phi(const Criterion& criterion, const DesignSpace& space, std::span<const double> weights);

/// phi_Ek(xi) / normalizers[k-1] for every k.
Vector efficiencies(const InfoMatrix& info, std::span<const double> normalizers);

/// A linear minorant sum_x h(x) xi(x) >= phi(xi), tight at the generating design.
struct Cut {
  Vector coefficients;
  Criterion::Kind kind = Criterion::Kind::D;
  std::size_t k = 0;
  double normalizer = 1.0;
  std::size_t origin = 0;

  double evaluate(std::span<const double> weights) const;
};

/// The cut generated by mu for a local criterion (D, A or Ek).  Throws
/// NearSingular for D and A when M(mu) is singular; callers regularize.
Cut cut(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& mu);
Cut cut(const Criterion& criterion, const DesignSpace& space, const Design& mu);

/// Every cut a criterion contributes from one design: one for the local
/// kinds, p normalized E_k cuts for the maximin kind.
std::vector<Cut> cuts(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& mu);

/// One linearization per prior atom, all on the same point list.
struct Prior {
  std::vector<DesignSpace> spaces;
  Vector weights;

  void validate() const;
};

/// sum over atoms of weight * H(mu, x, theta).  `gamma` > 0 regularizes
/// atoms where M(mu) is singular (D and A only, see regularized_if_singular).
Cut ave_cut(const Criterion& base, const Prior& prior, const Design& mu, double gamma = 0.0);
double ave_phi(const Criterion& base, const Prior& prior, const Design& design);

struct EquivalenceGap {
  double value = 0.0;
  /// False for E_k when lambda_k and lambda_{k+1} coincide, where the
  /// certificate is not valid.
  bool reliable = true;
};

/// Kiefer-Wolfowitz style optimality certificate d(xi); zero at the optimum.
EquivalenceGap equivalence_gap(const Criterion& criterion, const DesignSpace& space, const Design& design);
EquivalenceGap equivalence_gap(const Criterion& criterion, const DesignSpace& space, const InfoMatrix& info);

}  // namespace optdesign
