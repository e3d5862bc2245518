#include "optdesign/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace optdesign {

namespace {

std::string near_singular_message(double lambda_min, double lambda_max) {
  std::ostringstream os;
  os.precision(6);
  os << "matrix is near singular: lambda_min=" << lambda_min << " lambda_max=" << lambda_max;
  return os.str();
}

constexpr int kMaxSweeps = 100;

}  // namespace

NearSingular::NearSingular(double lambda_min, double lambda_max)
    : std::runtime_error(near_singular_message(lambda_min, lambda_max)),
      lambda_min_(lambda_min),
      lambda_max_(lambda_max) {}

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), packed_(dim * (dim + 1) / 2, 0.0) {
  if (dim == 0) throw std::invalid_argument("SymMatrix dimension must be positive");
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_rows(const std::vector<Vector>& rows, double tol) {
  const std::size_t p = rows.size();
  SymMatrix m(p);
  double scale = 0.0;
  for (const auto& row : rows) {
    if (row.size() != p) throw std::invalid_argument("matrix rows must form a square array");
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      if (std::abs(rows[i][j] - rows[j][i]) > tol * std::max(1.0, scale))
        throw std::invalid_argument("matrix is not symmetric");
      m.set(i, j, 0.5 * (rows[i][j] + rows[j][i]));
    }
  }
  return m;
}

void SymMatrix::add_outer(std::span<const double> f, double weight) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double wi = weight * f[i];
    for (std::size_t j = i; j < dim_; ++j) packed_[k++] += wi * f[j];
  }
}

void SymMatrix::add_identity(double gamma) {
  for (std::size_t i = 0; i < dim_; ++i) add(i, i, gamma);
}

SymMatrix& SymMatrix::operator*=(double alpha) {
  for (double& v : packed_) v *= alpha;
  return *this;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("dimension mismatch");
  for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] += other.packed_[k];
  return *this;
}

Vector SymMatrix::multiply(std::span<const double> v) const {
  Vector out(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += (*this)(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double SymMatrix::quad_form(std::span<const double> v) const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    s += (*this)(i, i) * v[i] * v[i];
    for (std::size_t j = i + 1; j < dim_; ++j) s += 2.0 * (*this)(i, j) * v[i] * v[j];
  }
  return s;
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) s += (*this)(i, i);
  return s;
}

double SymMatrix::max_abs() const {
  double s = 0.0;
  for (double v : packed_) s = std::max(s, std::abs(v));
  return s;
}

std::vector<double> SymMatrix::dense() const {
  std::vector<double> out(dim_ * dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) out[i * dim_ + j] = (*this)(i, j);
  return out;
}

Vector SpectralDecomp::project(std::span<const double> f) const {
  Vector z(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    double s = 0.0;
    const auto& u = eigenvectors[i];
    for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * f[j];
    z[i] = s;
  }
  return z;
}

SymMatrix SpectralDecomp::reconstruct(std::span<const double> values) const {
  SymMatrix m(dim());
  for (std::size_t i = 0; i < dim(); ++i) m.add_outer(eigenvectors[i], values[i]);
  return m;
}

SpectralDecomp sym_eig(const SymMatrix& m) {
  const std::size_t p = m.dim();
  std::vector<double> a = m.dense();
  std::vector<double> v(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) v[i * p + i] = 1.0;

  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * p + j]; };

  double total = 0.0;
  for (double x : a) total += x * x;

  int sweep = 0;
  for (;; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += at(i, j) * at(i, j);
    if (off <= 1e-30 * total || off == 0.0) break;
    if (sweep >= kMaxSweeps) throw EigenNotConverged("Jacobi iteration did not converge");

    for (std::size_t pi = 0; pi + 1 < p; ++pi) {
      for (std::size_t qi = pi + 1; qi < p; ++qi) {
        const double apq = at(pi, qi);
        if (apq == 0.0) continue;
        const double app = at(pi, pi);
        const double aqq = at(qi, qi);
        // Skip rotations that cannot change the diagonal in double precision.
        if (sweep > 3 && std::abs(apq) * 1e18 < std::abs(app) &&
            std::abs(apq) * 1e18 < std::abs(aqq)) {
          at(pi, qi) = at(qi, pi) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < p; ++k) {
          const double akp = at(k, pi);
          const double akq = at(k, qi);
          at(k, pi) = c * akp - s * akq;
          at(k, qi) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double apk = at(pi, k);
          const double aqk = at(qi, k);
          at(pi, k) = c * apk - s * aqk;
          at(qi, k) = s * apk + c * aqk;
        }
        at(pi, qi) = at(qi, pi) = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          const double vkp = v[k * p + pi];
          const double vkq = v[k * p + qi];
          v[k * p + pi] = c * vkp - s * vkq;
          v[k * p + qi] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return at(l, l) < at(r, r); });

  SpectralDecomp out;
  out.eigenvalues.resize(p);
  out.eigenvectors.assign(p, Vector(p));
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t src = order[i];
    out.eigenvalues[i] = at(src, src);
    auto& u = out.eigenvectors[i];
    for (std::size_t k = 0; k < p; ++k) u[k] = v[k * p + src];
    // Sign convention: largest-magnitude component positive.
    std::size_t big = 0;
    for (std::size_t k = 1; k < p; ++k)
      if (std::abs(u[k]) > std::abs(u[big]) + 1e-14) big = k;
    if (u[big] < 0.0)
      for (double& x : u) x = -x;
  }
  return out;
}

bool is_near_singular(const SpectralDecomp& eig, double rel_tol) {
  const double lmax = std::max(eig.lambda_max(), 0.0);
  return eig.lambda_min() <= rel_tol * lmax || lmax == 0.0;
}

SymMatrix inverse(const SpectralDecomp& eig, double rel_tol) {
  if (is_near_singular(eig, rel_tol)) throw NearSingular(eig.lambda_min(), eig.lambda_max());
  Vector inv(eig.dim());
  for (std::size_t i = 0; i < eig.dim(); ++i) inv[i] = 1.0 / eig.eigenvalues[i];
  return eig.reconstruct(inv);
}

SymMatrix inverse(const SymMatrix& m, double rel_tol) { return inverse(sym_eig(m), rel_tol); }

SymMatrix inverse_sqrt(const SymMatrix& m, double rel_tol) {
  const SpectralDecomp eig = sym_eig(m);
  if (is_near_singular(eig, rel_tol)) throw NearSingular(eig.lambda_min(), eig.lambda_max());
  Vector vals(eig.dim());
  for (std::size_t i = 0; i < eig.dim(); ++i) vals[i] = 1.0 / std::sqrt(eig.eigenvalues[i]);
  return eig.reconstruct(vals);
}

double det_root(const SpectralDecomp& eig) {
  if (is_near_singular(eig)) return 0.0;
  double log_sum = 0.0;
  for (double l : eig.eigenvalues) log_sum += std::log(l);
  return std::exp(log_sum / static_cast<double>(eig.dim()));
}

double det_root(const SymMatrix& m) { return det_root(sym_eig(m)); }

}  // namespace optdesign
