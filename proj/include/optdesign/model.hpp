#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optdesign/linalg.hpp"

namespace optdesign {

/// Finite design space: labeled points, their coordinates and the regression
/// feature vector f(x) of each point.  Immutable after construction.
class DesignSpace {
 public:
  /// `coords` may be empty (custom matrices) or have one entry per point.
  DesignSpace(std::vector<std::string> labels, std::vector<Vector> coords,
              std::vector<Vector> features);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }

  const std::string& label(std::size_t i) const { return labels_[i]; }
  std::span<const double> coords(std::size_t i) const;
  std::span<const double> feature(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> index_of(const std::string& label) const;

  /// True when the features span R^p.  Computed once at construction.
  bool full_rank() const { return full_rank_; }

 private:
  std::vector<std::string> labels_;
  std::vector<Vector> coords_;
  std::vector<double> features_;
  std::size_t dim_ = 0;
  bool full_rank_ = false;
};

/// Probability vector over the points of a design space.
class Design {
 public:
  /// Clamps entries in [-1e-12, 0) to zero and then renormalizes.  Throws
  /// std::invalid_argument on larger negativity, non-finite entries or a sum
  /// that differs from 1 by more than 1e-9.  With `normalize` any positive
  /// total is rescaled to 1.  Clean input is kept bit for bit.
  static Design from_weights(Vector weights, bool normalize = false);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const Vector& weights() const { return weights_; }
  std::vector<std::size_t> support(double threshold = 0.0) const;

 private:
  explicit Design(Vector w) : weights_(std::move(w)) {}
  Vector weights_;
};

Design uniform_design(const DesignSpace& space);
Design point_mass(const DesignSpace& space, const std::string& label);
Design mixture(std::span<const Design> designs, std::span<const double> coefficients);
/// Uniform mass over the named points (the sparse starts used for nonlinear models).
Design uniform_on(const DesignSpace& space, std::span<const std::string> labels);

/// Points start, start+step, ..., stop (inclusive up to rounding).
Vector make_grid(double start, double stop, double step);

/// f(x) = (1, x, ..., x^degree).
DesignSpace poly_model(int degree, std::span<const double> grid);

/// Quadratic response surface on [-1,1]^q: intercept, q squares, q linear
/// terms, q(q-1)/2 cross products x_i x_j (i < j), in that order.
DesignSpace qcube_model(int q, const std::vector<Vector>& points);
Vector qcube_features(std::span<const double> x);
/// Every point of grid^q, first coordinate varying slowest.
std::vector<Vector> cartesian_grid(int q, std::span<const double> axis);

/// The points of {-1,0,1}^q grouped by number of nonzero coordinates.
struct SymmetricSupport {
  int q = 0;
  std::vector<std::vector<std::size_t>> classes;

  Vector class_mass(const Design& design) const;
};

struct SymmetricSpace {
  DesignSpace space;
  SymmetricSupport support;
};

SymmetricSpace qcube_symmetric_space(int q);

/// Spreads each class mass evenly over the points of the class.
Design redistribute_uniform(const Design& design, const SymmetricSupport& support);

/// Response eta(x, theta) of a nonlinear model at a scalar or vector point.
using ResponseFn = std::function<double(std::span<const double> x, std::span<const double> theta)>;

/// theta1 * (exp(-theta2 x) - exp(-theta3 x))
double compartment_response(double x, std::span<const double> theta);
Vector compartment_gradient(double x, std::span<const double> theta);

/// Local linearization of the compartment model at theta0.
DesignSpace compartment_model(std::span<const double> theta0, std::span<const double> grid);

/// Local linearization of a user response by central differences with step
/// 1e-6 * max(1, |theta_i|).
DesignSpace jacobian_model(const ResponseFn& response, std::span<const double> theta0,
                           const std::vector<Vector>& points);

/// Raw |X| x p feature matrix; labels default to the row index.
DesignSpace custom_matrix_model(const std::vector<Vector>& rows,
                                std::vector<std::string> labels = {});

/// Formats a coordinate the way grid labels are written ("-0.68", "23.4").
std::string format_coordinate(double v);

}  // namespace optdesign
