#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace vesselnet {

// Closed-form space-time fields with exact first partials. Used for initial
// data and manufactured solutions; derivatives are analytic so that the
// manufactured forcing carries no differentiation error.

struct UnitFactor {
  bool operator==(const UnitFactor&) const = default;
};
struct SinFactor {
  double omega = 1.0;
  double phase = 0.0;
  bool operator==(const SinFactor&) const = default;
};
struct CosFactor {
  double omega = 1.0;
  double phase = 0.0;
  bool operator==(const CosFactor&) const = default;
};
/// sum_k coeffs[k] * s^k
struct PolyFactor {
  std::vector<double> coeffs;
  bool operator==(const PolyFactor&) const = default;
};

using Factor = std::variant<UnitFactor, SinFactor, CosFactor, PolyFactor>;

inline double factor_value(const Factor& f, double s) {
  return std::visit(
      [s](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, UnitFactor>) {
          return 1.0;
        } else if constexpr (std::is_same_v<G, SinFactor>) {
          return std::sin(g.omega * s + g.phase);
        } else if constexpr (std::is_same_v<G, CosFactor>) {
          return std::cos(g.omega * s + g.phase);
        } else {
          double acc = 0.0;
          for (auto it = g.coeffs.rbegin(); it != g.coeffs.rend(); ++it) acc = acc * s + *it;
          return acc;
        }
      },
      f);
}

inline double factor_derivative(const Factor& f, double s) {
  return std::visit(
      [s](const auto& g) -> double {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, UnitFactor>) {
          return 0.0;
        } else if constexpr (std::is_same_v<G, SinFactor>) {
          return g.omega * std::cos(g.omega * s + g.phase);
        } else if constexpr (std::is_same_v<G, CosFactor>) {
          return -g.omega * std::sin(g.omega * s + g.phase);
        } else {
          double acc = 0.0;
          for (std::size_t k = g.coeffs.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * g.coeffs[k];
          return acc;
        }
      },
      f);
}

/// amplitude * X(x) * T(t)
struct FieldTerm {
  double amplitude = 1.0;
  Factor x = UnitFactor{};
  Factor t = UnitFactor{};
  bool operator==(const FieldTerm&) const = default;
};

struct Field {
  double offset = 0.0;
  std::vector<FieldTerm> terms;

  static Field constant(double c) { return Field{c, {}}; }

  double value(double x, double t) const {
    double v = offset;
    for (const auto& term : terms) v += term.amplitude * factor_value(term.x, x) * factor_value(term.t, t);
    return v;
  }
  double dx(double x, double t) const {
    double v = 0.0;
    for (const auto& term : terms) v += term.amplitude * factor_derivative(term.x, x) * factor_value(term.t, t);
    return v;
  }
  double dt(double x, double t) const {
    double v = 0.0;
    for (const auto& term : terms) v += term.amplitude * factor_value(term.x, x) * factor_derivative(term.t, t);
    return v;
  }

  Field scaled(double s) const {
    Field out = *this;
    out.offset *= s;
    for (auto& term : out.terms) term.amplitude *= s;
    return out;
  }

  /// Pointwise sum of two fields.
  Field plus(const Field& other) const {
    Field out = *this;
    out.offset += other.offset;
    out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
    return out;
  }

  bool operator==(const Field&) const = default;
};

/// Piecewise-linear profile over x in [0,1] (initial data given as samples).
struct ProfileTable {
  std::vector<double> xs;
  std::vector<double> values;

  double value(double x) const {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return values.front();
    if (x >= xs.back()) return values.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
  }
  bool operator==(const ProfileTable&) const = default;
};

/// Initial profile of one unknown on one branch: a closed-form field sampled at t = 0, or a table.
using InitialProfile = std::variant<Field, ProfileTable>;

inline double initial_value(const InitialProfile& p, double x) {
  if (const auto* f = std::get_if<Field>(&p)) return f->value(x, 0.0);
  return std::get<ProfileTable>(p).value(x);
}

}  // namespace vesselnet
