#include "optdesign/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace optdesign {

namespace {

constexpr double kClampSlack = 1e-12;
constexpr double kSumTol = 1e-9;

// Rank of the stacked features by Gram-Schmidt with a relative threshold.
bool features_span(const std::vector<double>& features, std::size_t n, std::size_t p) {
  if (n < p) return false;
  std::vector<Vector> basis;
  double scale = 0.0;
  for (double v : features) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  for (std::size_t i = 0; i < n && basis.size() < p; ++i) {
    Vector v(features.begin() + static_cast<std::ptrdiff_t>(i * p),
             features.begin() + static_cast<std::ptrdiff_t>((i + 1) * p));
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double d = 0.0;
        for (std::size_t k = 0; k < p; ++k) d += b[k] * v[k];
        for (std::size_t k = 0; k < p; ++k) v[k] -= d * b[k];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 1e-10 * scale) {
      for (double& x : v) x /= norm;
      basis.push_back(std::move(v));
    }
  }
  return basis.size() == p;
}

}  // namespace

DesignSpace::DesignSpace(std::vector<std::string> labels, std::vector<Vector> coords,
                         std::vector<Vector> features)
    : labels_(std::move(labels)), coords_(std::move(coords)) {
  if (labels_.empty()) throw std::invalid_argument("design space must contain at least one point");
  if (features.size() != labels_.size())
    throw std::invalid_argument("one feature vector per point is required");
  if (!coords_.empty() && coords_.size() != labels_.size())
    throw std::invalid_argument("coordinates must be given for every point or for none");
  dim_ = features.front().size();
  if (dim_ == 0) throw std::invalid_argument("feature vectors must be nonempty");
  features_.reserve(dim_ * features.size());
  for (const auto& f : features) {
    if (f.size() != dim_) throw std::invalid_argument("feature vectors must have identical length");
    for (double v : f)
      if (!std::isfinite(v)) throw std::invalid_argument("feature values must be finite");
    features_.insert(features_.end(), f.begin(), f.end());
  }
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (!seen.emplace(labels_[i], i).second)
      throw std::invalid_argument("duplicate point label: " + labels_[i]);
  full_rank_ = features_span(features_, labels_.size(), dim_);
}

std::span<const double> DesignSpace::coords(std::size_t i) const {
  if (coords_.empty()) return {};
  return coords_[i];
}

std::optional<std::size_t> DesignSpace::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

Design Design::from_weights(Vector weights, bool normalize) {
  if (weights.empty()) throw std::invalid_argument("design must have at least one weight");
  bool clamped = false;
  for (double& w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("design weights must be finite");
    if (w < 0.0) {
      if (w < -kClampSlack) throw std::invalid_argument("design weights must be nonnegative");
      w = 0.0;
      clamped = true;
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("design weights must have positive total");
  if (!normalize && std::abs(total - 1.0) > kSumTol)
    throw std::invalid_argument("design weights must sum to one");
  if ((normalize || clamped) && total != 1.0)
    for (double& w : weights) w /= total;
  return Design(std::move(weights));
}

std::vector<std::size_t> Design::support(double threshold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (weights_[i] > threshold) out.push_back(i);
  return out;
}

Design uniform_design(const DesignSpace& space) {
  return Design::from_weights(Vector(space.size(), 1.0 / static_cast<double>(space.size())), true);
}

Design point_mass(const DesignSpace& space, const std::string& label) {
  const auto idx = space.index_of(label);
  if (!idx) throw std::invalid_argument("unknown point label: " + label);
  Vector w(space.size(), 0.0);
  w[*idx] = 1.0;
  return Design::from_weights(std::move(w));
}

Design uniform_on(const DesignSpace& space, std::span<const std::string> labels) {
  if (labels.empty()) throw std::invalid_argument("at least one label is required");
  Vector w(space.size(), 0.0);
  for (const auto& l : labels) {
    const auto idx = space.index_of(l);
    if (!idx) throw std::invalid_argument("unknown point label: " + l);
    w[*idx] += 1.0;
  }
  return Design::from_weights(std::move(w), true);
}

Design mixture(std::span<const Design> designs, std::span<const double> coefficients) {
  if (designs.empty() || designs.size() != coefficients.size())
    throw std::invalid_argument("mixture needs one coefficient per design");
  double total = 0.0;
  for (double c : coefficients) {
    if (c < 0.0) throw std::invalid_argument("mixture coefficients must be nonnegative");
    total += c;
  }
  if (std::abs(total - 1.0) > kSumTol) throw std::invalid_argument("mixture coefficients must sum to one");
  Vector w(designs.front().size(), 0.0);
  for (std::size_t d = 0; d < designs.size(); ++d) {
    if (designs[d].size() != w.size()) throw std::invalid_argument("designs live on different spaces");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += coefficients[d] * designs[d][i];
  }
  return Design::from_weights(std::move(w), true);
}

Vector make_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (stop < start) throw std::invalid_argument("grid stop must not precede start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  Vector out(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Round to 12 significant decimals so 0.1-type steps land on their labels.
    const double v = start + static_cast<double>(i) * step;
    out[i] = std::round(v * 1e12) / 1e12;
  }
  return out;
}

std::string format_coordinate(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

DesignSpace poly_model(int degree, std::span<const double> grid) {
  if (degree < 1) throw std::invalid_argument("polynomial degree must be at least 1");
  if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
  std::vector<std::string> labels;
  std::vector<Vector> coords, features;
  for (double x : grid) {
    Vector f(static_cast<std::size_t>(degree) + 1);
    double pw = 1.0;
    for (auto& v : f) {
      v = pw;
      pw *= x;
    }
    labels.push_back(format_coordinate(x));
    coords.push_back({x});
    features.push_back(std::move(f));
  }
  return DesignSpace(std::move(labels), std::move(coords), std::move(features));
}

Vector qcube_features(std::span<const double> x) {
  const std::size_t q = x.size();
  Vector f;
  f.reserve(1 + 2 * q + q * (q - 1) / 2);
  f.push_back(1.0);
  for (double xi : x) f.push_back(xi * xi);
  for (double xi : x) f.push_back(xi);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) f.push_back(x[i] * x[j]);
  return f;
}

namespace {

std::string tuple_label(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ",";
    s += format_coordinate(x[i]);
  }
  return s + ")";
}

}  // namespace

DesignSpace qcube_model(int q, const std::vector<Vector>& points) {
  if (q < 1) throw std::invalid_argument("cube dimension q must be at least 1");
  if (points.empty()) throw std::invalid_argument("point list must be nonempty");
  std::vector<std::string> labels;
  std::vector<Vector> features;
  for (const auto& x : points) {
    if (x.size() != static_cast<std::size_t>(q)) throw std::invalid_argument("point has wrong dimension");
    for (double xi : x)
      if (xi < -1.0 - 1e-12 || xi > 1.0 + 1e-12) throw std::invalid_argument("points must lie in [-1,1]^q");
    labels.push_back(q == 1 ? format_coordinate(x[0]) : tuple_label(x));
    features.push_back(qcube_features(x));
  }
  return DesignSpace(std::move(labels), points, std::move(features));
}

std::vector<Vector> cartesian_grid(int q, std::span<const double> axis) {
  std::vector<Vector> out{Vector{}};
  for (int d = 0; d < q; ++d) {
    std::vector<Vector> next;
    next.reserve(out.size() * axis.size());
    for (const auto& prefix : out)
      for (double a : axis) {
        Vector v = prefix;
        v.push_back(a);
        next.push_back(std::move(v));
      }
    out = std::move(next);
  }
  return out;
}

SymmetricSpace qcube_symmetric_space(int q) {
  if (q < 1) throw std::invalid_argument("cube dimension q must be at least 1");
  const Vector axis{-1.0, 0.0, 1.0};
  const auto points = cartesian_grid(q, axis);
  SymmetricSupport support;
  support.q = q;
  support.classes.resize(static_cast<std::size_t>(q) + 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t nonzero = 0;
    for (double v : points[i]) nonzero += v != 0.0;
    support.classes[nonzero].push_back(i);
  }
  return {qcube_model(q, points), std::move(support)};
}

Vector SymmetricSupport::class_mass(const Design& design) const {
  Vector mass(classes.size(), 0.0);
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t i : classes[c]) mass[c] += design[i];
  return mass;
}

Design redistribute_uniform(const Design& design, const SymmetricSupport& support) {
  Vector w(design.size(), 0.0);
  std::size_t covered = 0;
  for (const auto& cls : support.classes) {
    double mass = 0.0;
    for (std::size_t i : cls) {
      if (i >= design.size()) throw std::invalid_argument("design does not live on the symmetric space");
      mass += design[i];
    }
    for (std::size_t i : cls) w[i] = mass / static_cast<double>(cls.size());
    covered += cls.size();
  }
  if (covered != design.size()) throw std::invalid_argument("design does not live on the symmetric space");
  return Design::from_weights(std::move(w), true);
}

double compartment_response(double x, std::span<const double> theta) {
  return theta[0] * (std::exp(-theta[1] * x) - std::exp(-theta[2] * x));
}

Vector compartment_gradient(double x, std::span<const double> theta) {
  const double e2 = std::exp(-theta[1] * x);
  const double e3 = std::exp(-theta[2] * x);
  return {e2 - e3, -theta[0] * x * e2, theta[0] * x * e3};
}

DesignSpace compartment_model(std::span<const double> theta0, std::span<const double> grid) {
  if (theta0.size() != 3) throw std::invalid_argument("compartment model needs three parameters");
  if (theta0[1] == theta0[2]) throw std::invalid_argument("theta2 and theta3 must differ");
  if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
  std::vector<std::string> labels;
  std::vector<Vector> coords, features;
  for (double x : grid) {
    if (!(x > 0.0)) throw std::invalid_argument("compartment design points must be positive");
    labels.push_back(format_coordinate(x));
    coords.push_back({x});
    features.push_back(compartment_gradient(x, theta0));
  }
  return DesignSpace(std::move(labels), std::move(coords), std::move(features));
}

DesignSpace jacobian_model(const ResponseFn& response, std::span<const double> theta0,
                           const std::vector<Vector>& points) {
  if (points.empty()) throw std::invalid_argument("point list must be nonempty");
  const std::size_t p = theta0.size();
  std::vector<std::string> labels;
  std::vector<Vector> features;
  Vector theta(theta0.begin(), theta0.end());
  for (const auto& x : points) {
    Vector f(p);
    for (std::size_t i = 0; i < p; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta0[i]));
      theta[i] = theta0[i] + h;
      const double up = response(x, theta);
      theta[i] = theta0[i] - h;
      const double down = response(x, theta);
      theta[i] = theta0[i];
      f[i] = (up - down) / (2.0 * h);
    }
    labels.push_back(x.size() == 1 ? format_coordinate(x[0]) : tuple_label(x));
    features.push_back(std::move(f));
  }
  return DesignSpace(std::move(labels), points, std::move(features));
}

DesignSpace custom_matrix_model(const std::vector<Vector>& rows, std::vector<std::string> labels) {
  if (labels.empty())
    for (std::size_t i = 0; i < rows.size(); ++i) labels.push_back(std::to_string(i));
  if (labels.size() != rows.size()) throw std::invalid_argument("one label per feature row is required");
  return DesignSpace(std::move(labels), {}, rows);
}

}  // namespace optdesign
