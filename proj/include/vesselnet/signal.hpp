#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace vesselnet {

// Boundary signals: total functions of time t >= 0.

struct ConstantSignal {
  double value = 0.0;
  bool operator==(const ConstantSignal&) const = default;
};

/// mean + amplitude * sin(2*pi*t/period + phase)
struct SinusoidSignal {
  double mean = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;
  bool operator==(const SinusoidSignal&) const = default;
};

/// Piecewise-linear table; holds the end values outside the sampled range.
struct TableSignal {
  std::vector<std::pair<double, double>> points;
  bool operator==(const TableSignal&) const = default;
};

/// Programmatic signal with an analytic derivative. Used by verification studies
/// (traces of manufactured fields); it has no textual form.
struct FunctionSignal {
  std::string label;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  bool operator==(const FunctionSignal& other) const { return label == other.label; }
};

class Signal {
public:
  using Variant = std::variant<ConstantSignal, SinusoidSignal, TableSignal, FunctionSignal>;

  Signal() : v_(ConstantSignal{}) {}
  Signal(ConstantSignal s) : v_(s) {}
  Signal(SinusoidSignal s) : v_(s) {}
  Signal(TableSignal s) : v_(std::move(s)) {}
  Signal(FunctionSignal s) : v_(std::move(s)) {}

  static Signal constant(double v) { return ConstantSignal{v}; }
  static Signal sinusoid(double mean, double amplitude, double period, double phase = 0.0) {
    return SinusoidSignal{mean, amplitude, period, phase};
  }
  static Signal table(std::vector<std::pair<double, double>> pts) { return TableSignal{std::move(pts)}; }
  static Signal function(std::string label, std::function<double(double)> value,
                         std::function<double(double)> derivative) {
    return FunctionSignal{std::move(label), std::move(value), std::move(derivative)};
  }

  const Variant& variant() const noexcept { return v_; }

  double value(double t) const {
    return std::visit(
        [t](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConstantSignal>) {
            return s.value;
          } else if constexpr (std::is_same_v<S, SinusoidSignal>) {
            return s.mean + s.amplitude * std::sin(2.0 * std::numbers::pi * t / s.period + s.phase);
          } else if constexpr (std::is_same_v<S, TableSignal>) {
            return table_value(s, t);
          } else {
            return s.value(t);
          }
        },
        v_);
  }

  /// Time derivative; for tables the slope of the active segment (zero when extrapolating).
  double derivative(double t) const {
    return std::visit(
        [t](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConstantSignal>) {
            return 0.0;
          } else if constexpr (std::is_same_v<S, SinusoidSignal>) {
            const double w = 2.0 * std::numbers::pi / s.period;
            return s.amplitude * w * std::cos(w * t + s.phase);
          } else if constexpr (std::is_same_v<S, TableSignal>) {
            return table_slope(s, t);
          } else {
            return s.derivative(t);
          }
        },
        v_);
  }

  bool is_table() const noexcept { return std::holds_alternative<TableSignal>(v_); }
  bool is_function() const noexcept { return std::holds_alternative<FunctionSignal>(v_); }

  /// False for tables with more than one point: their derivative jumps at the knots.
  bool continuously_differentiable() const {
    if (const auto* t = std::get_if<TableSignal>(&v_)) return t->points.size() <= 1;
    return true;
  }

  /// Empty string when the signal is well formed, otherwise a description of the problem.
  std::string defect() const {
    if (const auto* s = std::get_if<SinusoidSignal>(&v_)) {
      if (!(s->period > 0.0)) return "sinusoid period must be positive";
    }
    if (const auto* t = std::get_if<TableSignal>(&v_)) {
      if (t->points.empty()) return "table signal has no points";
      for (std::size_t i = 1; i < t->points.size(); ++i) {
        if (!(t->points[i].first > t->points[i - 1].first)) return "table times must be strictly increasing";
      }
    }
    if (const auto* f = std::get_if<FunctionSignal>(&v_)) {
      if (!f->value || !f->derivative) return "function signal is missing a callable";
    }
    return {};
  }

  /// Returns a copy scaled by `factor` (used for superposition checks).
  Signal scaled(double factor) const {
    return std::visit(
        [factor](const auto& s) -> Signal {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConstantSignal>) {
            return ConstantSignal{factor * s.value};
          } else if constexpr (std::is_same_v<S, SinusoidSignal>) {
            return SinusoidSignal{factor * s.mean, factor * s.amplitude, s.period, s.phase};
          } else if constexpr (std::is_same_v<S, TableSignal>) {
            TableSignal out = s;
            for (auto& p : out.points) p.second *= factor;
            return out;
          } else {
            auto v = s.value;
            auto d = s.derivative;
            return FunctionSignal{s.label + "*scaled", [v, factor](double t) { return factor * v(t); },
                                  [d, factor](double t) { return factor * d(t); }};
          }
        },
        v_);
  }

  bool operator==(const Signal& other) const { return v_ == other.v_; }

private:
  static std::size_t segment(const TableSignal& s, double t) {
    auto it = std::upper_bound(s.points.begin(), s.points.end(), t,
                               [](double tv, const auto& p) { return tv < p.first; });
    return static_cast<std::size_t>(it - s.points.begin());
  }

  static double table_value(const TableSignal& s, double t) {
    if (s.points.empty()) return 0.0;
    if (t <= s.points.front().first) return s.points.front().second;
    if (t >= s.points.back().first) return s.points.back().second;
    const std::size_t i = segment(s, t);
    const auto& [t0, v0] = s.points[i - 1];
    const auto& [t1, v1] = s.points[i];
    const double w = (t - t0) / (t1 - t0);
    return v0 + w * (v1 - v0);
  }

  static double table_slope(const TableSignal& s, double t) {
    if (s.points.size() < 2) return 0.0;
    if (t < s.points.front().first || t >= s.points.back().first) return 0.0;
    const std::size_t i = segment(s, t);
    const auto& [t0, v0] = s.points[i - 1];
    const auto& [t1, v1] = s.points[i];
    return (v1 - v0) / (t1 - t0);
  }

  Variant v_;
};

}  // namespace vesselnet
