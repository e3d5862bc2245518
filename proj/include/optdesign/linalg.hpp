#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace optdesign {

using Vector = std::vector<double>;

/// Raised when a matrix is too close to singular to be inverted.  Carries
/// the offending smallest eigenvalue so callers can decide to regularize.
class NearSingular : public std::runtime_error {
 public:
  NearSingular(double lambda_min, double lambda_max);

  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

 private:
  double lambda_min_;
  double lambda_max_;
};

class EigenNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix in packed upper-triangular storage, so that
/// (i, j) and (j, i) always address the same number.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Builds from full rows; throws std::invalid_argument when the input is
  /// not square or asymmetric beyond `tol` (relative to the largest entry).
  static SymMatrix from_rows(const std::vector<Vector>& rows, double tol = 1e-12);

  std::size_t dim() const { return dim_; }

  double operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }
  void set(std::size_t i, std::size_t j, double value) { packed_[index(i, j)] = value; }
  void add(std::size_t i, std::size_t j, double value) { packed_[index(i, j)] += value; }

  /// this += weight * f f^T
  void add_outer(std::span<const double> f, double weight);
  void add_identity(double gamma);
  SymMatrix& operator*=(double alpha);
  SymMatrix& operator+=(const SymMatrix& other);

  Vector multiply(std::span<const double> v) const;
  double quad_form(std::span<const double> v) const;
  double trace() const;
  double max_abs() const;

  /// Full row-major copy (dim*dim).
  std::vector<double> dense() const;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * dim_ - i * (i + 1) / 2 + j;
  }

  std::size_t dim_;
  std::vector<double> packed_;
};

/// Eigenvalues ascending; eigenvectors[i] is the unit vector for eigenvalues[i].
struct SpectralDecomp {
  Vector eigenvalues;
  std::vector<Vector> eigenvectors;

  std::size_t dim() const { return eigenvalues.size(); }
  double lambda_min() const { return eigenvalues.front(); }
  double lambda_max() const { return eigenvalues.back(); }

  /// z_i = u_i^T f for every eigenvector.
  Vector project(std::span<const double> f) const;
  /// U diag(g(lambda)) U^T for the supplied per-eigenvalue values.
  SymMatrix reconstruct(std::span<const double> values) const;
  SymMatrix reconstruct() const { return reconstruct(eigenvalues); }
};

/// Relative singularity threshold: lambda_min <= kSingularRelTol * lambda_max.
inline constexpr double kSingularRelTol = 1e-12;

/// Cyclic Jacobi eigendecomposition.  Deterministic for a fixed input.
SpectralDecomp sym_eig(const SymMatrix& m);

bool is_near_singular(const SpectralDecomp& eig, double rel_tol = kSingularRelTol);

SymMatrix inverse(const SymMatrix& m, double rel_tol = kSingularRelTol);
SymMatrix inverse(const SpectralDecomp& eig, double rel_tol = kSingularRelTol);
SymMatrix inverse_sqrt(const SymMatrix& m, double rel_tol = kSingularRelTol);

/// det(M)^(1/p) evaluated in the log domain; 0 when any eigenvalue is not
/// positive beyond the singularity tolerance.
double det_root(const SymMatrix& m);
double det_root(const SpectralDecomp& eig);

}  // namespace optdesign
