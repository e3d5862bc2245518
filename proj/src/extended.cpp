#include "optdesign/extended.hpp"

#include <cmath>
#include <stdexcept>

namespace optdesign {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void PerturbationTuple::validate() const {
  const std::size_t p = theta0.size();
  if (p == 0) throw std::invalid_argument("theta0 is empty");
  if (deltas.size() != p) throw std::invalid_argument("a tuple needs exactly p deltas");
  Vector norms(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (deltas[i].size() != p) throw std::invalid_argument("delta length differs from theta0");
    norms[i] = std::sqrt(dot(deltas[i], deltas[i]));
    if (!(norms[i] > 0.0)) throw std::invalid_argument("delta " + std::to_string(i + 1) + " has zero norm");
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (std::abs(dot(deltas[i], deltas[j])) > 1e-10 * norms[i] * norms[j])
        throw std::invalid_argument("deltas " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                    " are not orthogonal");
}

PointResponse linear_response(const DesignSpace& space) {
  return [&space](std::size_t point, std::span<const double> theta) { return dot(space.feature(point), theta); };
}

PointResponse compartment_point_response(Vector times) {
  return [times = std::move(times)](std::size_t point, std::span<const double> theta) {
    return compartment_response(times.at(point), theta);
  };
}

std::string to_string(ExtendedKind kind) {
  switch (kind) {
    case ExtendedKind::eD: return "eD";
    case ExtendedKind::eA: return "eA";
    case ExtendedKind::eEk: return "eEk";
  }
  return "?";
}

ExtendedKind parse_extended_kind(const std::string& text) {
  if (text == "eD" || text == "D") return ExtendedKind::eD;
  if (text == "eA" || text == "A") return ExtendedKind::eA;
  if (text == "eEk" || text == "Ek") return ExtendedKind::eEk;
  throw std::invalid_argument("unknown extended criterion '" + text + "' (expected eD, eA or eEk)");
}

double extended_objective(ExtendedKind kind, std::size_t k, const PointResponse& response, std::size_t n_points,
                          const Design& design, const PerturbationTuple& tuple) {
  tuple.validate();
  if (design.size() != n_points) throw std::invalid_argument("design does not match the point list");
  const std::size_t p = tuple.theta0.size();
  if (kind == ExtendedKind::eEk && (k < 1 || k > p)) throw std::invalid_argument("k must lie in 1..p");

  Vector base(n_points);
  for (std::size_t x = 0; x < n_points; ++x)
    if (design[x] > 0.0) base[x] = response(x, tuple.theta0);

  // ||eta(., theta^(i)) - eta(., theta0)||^2 in L2(xi), and ||delta_i||^2.
  Vector resp_sq(p, 0.0), delta_sq(p);
  Vector theta(p);
  for (std::size_t i = 0; i < p; ++i) {
    delta_sq[i] = dot(tuple.deltas[i], tuple.deltas[i]);
    for (std::size_t j = 0; j < p; ++j) theta[j] = tuple.theta0[j] + tuple.deltas[i][j];
    for (std::size_t x = 0; x < n_points; ++x) {
      if (design[x] <= 0.0) continue;
      const double d = response(x, theta) - base[x];
      resp_sq[i] += design[x] * d * d;
    }
  }

  switch (kind) {
    case ExtendedKind::eD: {
      double log_prod = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        log_prod += std::log(delta_sq[i]);
        sum += resp_sq[i];
      }
      return sum / static_cast<double>(p) / std::exp(log_prod / static_cast<double>(p));
    }
    case ExtendedKind::eA: {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        num += delta_sq[i] * resp_sq[i];
        den += delta_sq[i];
      }
      return num / (den * den);
    }
    case ExtendedKind::eEk: {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += resp_sq[i] / delta_sq[i];
      return s;
    }
  }
  return 0.0;
}

PerturbationTuple tuple_from_design(const InfoMatrix& info, Vector theta0) {
  const SpectralDecomp& eig = info.spectral();
  if (is_near_singular(eig)) throw NearSingular(eig.lambda_min(), eig.lambda_max());
  const std::size_t p = info.dim();
  if (theta0.size() != p) throw std::invalid_argument("theta0 length differs from the model dimension");
  PerturbationTuple tuple{std::move(theta0), {}};
  for (std::size_t i = 0; i < p; ++i) {
    Vector d = eig.eigenvectors[i];
    const double s = 1.0 / std::sqrt(eig.eigenvalues[i]);
    for (double& v : d) v *= s;
    tuple.deltas.push_back(std::move(d));
  }
  return tuple;
}

PerturbationTuple tuple_from_design(const DesignSpace& space, const Design& design, Vector theta0) {
  return tuple_from_design(info_matrix(space, design), std::move(theta0));
}

}  // namespace optdesign
