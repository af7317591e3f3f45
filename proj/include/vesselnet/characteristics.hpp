#pragma once

#include <algorithm>
#include <cmath>

#include "vesselnet/errors.hpp"
#include "vesselnet/models.hpp"

namespace vesselnet {

/// Characteristic speeds of B = [[0, a], [b, 2c]] and their half-gap u.
struct EigenData {
  double lambda_l = -1.0;  ///< c - u, left-going
  double lambda_r = 1.0;   ///< c + u, right-going
  double u = 1.0;          ///< sqrt(c^2 + ab) > 0
};

/// r = -lambda_l P + a Q moves with lambda_r; s = -lambda_r P + a Q moves with lambda_l.
struct RiemannPair {
  double r = 0.0;
  double s = 0.0;
};

struct PQ {
  double p = 0.0;
  double q = 0.0;
  bool operator==(const PQ&) const = default;
};

/// Throws HyperbolicityLoss unless c^2 + ab > 1e-14 (c^2 + |ab| + 1).
inline EigenData eigen(const Coefficients& co) {
  const double ab = co.a * co.b;
  const double disc = co.c * co.c + ab;
  if (!(disc > 1e-14 * (co.c * co.c + std::abs(ab) + 1.0))) throw HyperbolicityLoss(disc);
  const double u = std::sqrt(disc);
  return {co.c - u, co.c + u, u};
}

inline RiemannPair to_riemann(double pressure, double flow, const Coefficients& co, const EigenData& e) {
  return {-e.lambda_l * pressure + co.a * flow, -e.lambda_r * pressure + co.a * flow};
}

inline PQ from_riemann(const RiemannPair& rp, const Coefficients& co, const EigenData& e) {
  return {(rp.r - rp.s) / (2.0 * e.u), (e.lambda_r * rp.r - e.lambda_l * rp.s) / (2.0 * e.u * co.a)};
}

/// Right-hand sides of the normal form: (d^R, d^L) = (-lambda_l f + a g, -lambda_r f + a g).
struct NormalRhs {
  double right = 0.0;
  double left = 0.0;
};

inline NormalRhs normal_rhs(const Coefficients& co, const EigenData& e) {
  return {-e.lambda_l * co.f + co.a * co.g, -e.lambda_r * co.f + co.a * co.g};
}

/// One characteristic must enter and one must leave at every branch end.
struct BoundarySignCheck {
  bool ok = true;
  double lambda_l = 0.0;
  double lambda_r = 0.0;
};

inline BoundarySignCheck check_boundary_sign(const EigenData& e) {
  return {e.lambda_l < 0.0 && e.lambda_r > 0.0, e.lambda_l, e.lambda_r};
}

struct CflCheck {
  bool ok = true;
  double courant = 0.0;  ///< sigma * speed_bound; must stay strictly below 1
};

inline CflCheck cfl_check(double sigma, double speed_bound) {
  const double courant = sigma * speed_bound;
  return {courant < 1.0, courant};
}

inline double speed_bound(const EigenData& e) { return std::max(std::abs(e.lambda_l), std::abs(e.lambda_r)); }

}  // namespace vesselnet
