#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "optdesign/criteria.hpp"
#include "optdesign/linalg.hpp"
#include "optdesign/model.hpp"

namespace optdesign {

/// theta0 together with pairwise orthogonal, nonzero offsets
/// delta_i = theta^(i) - theta0.
struct PerturbationTuple {
  Vector theta0;
  std::vector<Vector> deltas;

  /// Throws std::invalid_argument on a zero delta, mismatched lengths or
  /// offsets that are not orthogonal within 1e-10 (relative).
  void validate() const;
};

/// Response evaluated at the index of a point of the design space.
using PointResponse = std::function<double(std::size_t point, std::span<const double> theta)>;

/// eta(x, theta) = f(x)^T theta.
PointResponse linear_response(const DesignSpace& space);
/// The one-compartment response on a grid of sampling times.
PointResponse compartment_point_response(Vector times);

enum class ExtendedKind { eD, eA, eEk };

std::string to_string(ExtendedKind kind);
ExtendedKind parse_extended_kind(const std::string& text);

/// The extended objective for one specific tuple.  eEk uses the first k
/// deltas in the order given.
double extended_objective(ExtendedKind kind, std::size_t k, const PointResponse& response,
                          std::size_t n_points, const Design& design, const PerturbationTuple& tuple);

/// delta_i = u_i / sqrt(lambda_i) in ascending eigenvalue order.  Throws
/// NearSingular when M is singular.
PerturbationTuple tuple_from_design(const InfoMatrix& info, Vector theta0);
PerturbationTuple tuple_from_design(const DesignSpace& space, const Design& design, Vector theta0);

}  // namespace optdesign
