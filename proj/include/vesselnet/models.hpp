#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vesselnet/errors.hpp"
#include "vesselnet/field.hpp"

namespace vesselnet {

/// Entries of one branch's system  P_t + a Q_x = f,  Q_t + b P_x + 2c Q_x = g.
struct Coefficients {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double f = 0.0;
  double g = 0.0;
  bool operator==(const Coefficients&) const = default;
};

/// The five system functions of (x, t, P, Q) on one branch. Implementations
/// must be pure and return a > 0 on their admissible domain.
class CoefficientModel {
public:
  virtual ~CoefficientModel() = default;
  virtual Coefficients eval(double x, double t, double pressure, double flow) const = 0;
};

using ModelPtr = std::shared_ptr<const CoefficientModel>;

// ---------------------------------------------------------------------------
// Linear constant-coefficient model

struct LinearParams {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
  double f = 0.0;
  double g = 0.0;
  bool operator==(const LinearParams&) const = default;
};

class LinearConstantModel final : public CoefficientModel {
public:
  explicit LinearConstantModel(LinearParams p) : p_(p) {
    if (!(p.a > 0.0)) throw std::invalid_argument("linear model requires a > 0");
  }

  Coefficients eval(double, double, double, double) const override { return {p_.a, p_.b, p_.c, p_.f, p_.g}; }

  const LinearParams& params() const noexcept { return p_; }

private:
  LinearParams p_;
};

// ---------------------------------------------------------------------------
// Reference area profile a0(x)

struct ConstantArea {
  double value = 1.0;
  bool operator==(const ConstantArea&) const = default;
};

/// a0(x) = alpha + gamma * x
struct LinearTaper {
  double alpha = 1.0;
  double gamma = 0.0;
  bool operator==(const LinearTaper&) const = default;
};

/// Natural cubic spline through (xs[i], areas[i]).
struct SplineArea {
  std::vector<double> xs;
  std::vector<double> areas;
  bool operator==(const SplineArea& o) const { return xs == o.xs && areas == o.areas; }
};

using AreaProfileSpec = std::variant<ConstantArea, LinearTaper, SplineArea>;

/// Evaluates a0 and its derivative; the spline's second-derivative table is built once.
class AreaProfile {
public:
  AreaProfile() : spec_(ConstantArea{}) {}
  explicit AreaProfile(AreaProfileSpec spec) : spec_(std::move(spec)) {
    if (const auto* s = std::get_if<SplineArea>(&spec_)) build_spline(*s);
    for (int i = 0; i <= 200; ++i) {
      if (!(value(i / 200.0) > 0.0)) throw std::invalid_argument("reference area a0(x) must be positive on [0,1]");
    }
  }

  const AreaProfileSpec& spec() const noexcept { return spec_; }

  double value(double x) const {
    if (const auto* c = std::get_if<ConstantArea>(&spec_)) return c->value;
    if (const auto* l = std::get_if<LinearTaper>(&spec_)) return l->alpha + l->gamma * x;
    return spline_eval(x, false);
  }

  double derivative(double x) const {
    if (std::holds_alternative<ConstantArea>(spec_)) return 0.0;
    if (const auto* l = std::get_if<LinearTaper>(&spec_)) return l->gamma;
    return spline_eval(x, true);
  }

private:
  void build_spline(const SplineArea& s) {
    const std::size_t n = s.xs.size();
    if (n < 2 || s.areas.size() != n) throw std::invalid_argument("spline area needs >= 2 matching (x, area) samples");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(s.xs[i] > s.xs[i - 1])) throw std::invalid_argument("spline knots must be strictly increasing");
    }
    // Natural spline: tridiagonal solve for second derivatives (Thomas algorithm).
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = s.xs[i] - s.xs[i - 1];
      const double h1 = s.xs[i + 1] - s.xs[i];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((s.areas[i + 1] - s.areas[i]) / h1 - (s.areas[i] - s.areas[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double lower = s.xs[i] - s.xs[i - 1];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  double spline_eval(double x, bool derivative) const {
    const auto& s = std::get<SplineArea>(spec_);
    const std::size_t n = s.xs.size();
    std::size_t i = 1;
    while (i + 1 < n && x > s.xs[i]) ++i;
    const double x0 = s.xs[i - 1], x1 = s.xs[i];
    const double h = x1 - x0;
    const double A = (x1 - x) / h;
    const double B = (x - x0) / h;
    const double y0 = s.areas[i - 1], y1 = s.areas[i];
    const double m0 = m_[i - 1], m1 = m_[i];
    if (!derivative) {
      return A * y0 + B * y1 + ((A * A * A - A) * m0 + (B * B * B - B) * m1) * h * h / 6.0;
    }
    return (y1 - y0) / h - (3.0 * A * A - 1.0) / 6.0 * h * m0 + (3.0 * B * B - 1.0) / 6.0 * h * m1;
  }

  AreaProfileSpec spec_;
  std::vector<double> m_;
};

// ---------------------------------------------------------------------------
// Blood-flow model with logarithmic area law A(x,P) = a0(x) + beta ln(P/p0)

struct BloodFlowParams {
  double rho = 1.0;
  double mu = 0.0;
  double beta = 1.0;
  double p0 = 1.0;
  AreaProfileSpec a0 = ConstantArea{1.0};
  /// Lowest admissible pressure; zero selects the default 1e-9 * p0.
  double p_min = 0.0;
  bool operator==(const BloodFlowParams&) const = default;
};

class BloodFlowModel final : public CoefficientModel {
public:
  explicit BloodFlowModel(BloodFlowParams p) : p_(std::move(p)), area_(p_.a0) {
    if (!(p_.rho > 0.0)) throw std::invalid_argument("blood-flow model requires rho > 0");
    if (!(p_.mu >= 0.0)) throw std::invalid_argument("blood-flow model requires mu >= 0");
    if (!(p_.beta > 0.0)) throw std::invalid_argument("blood-flow model requires beta > 0");
    if (!(p_.p0 > 0.0)) throw std::invalid_argument("blood-flow model requires p0 > 0");
    if (p_.p_min == 0.0) p_.p_min = 1e-9 * p_.p0;
    if (!(p_.p_min > 0.0)) throw std::invalid_argument("blood-flow model requires p_min > 0");
  }

  const BloodFlowParams& params() const noexcept { return p_; }

  double area(double x, double pressure) const { return area_.value(x) + p_.beta * std::log(pressure / p_.p0); }

  Coefficients eval(double x, double t, double P, double Q) const override {
    if (!(P >= p_.p_min)) {
      std::ostringstream os;
      os.precision(17);
      os << "pressure " << P << " below admissible minimum " << p_.p_min;
      throw DomainError(os.str(), x, t, P);
    }
    const double A = area(x, P);
    if (!(A > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "vessel collapse: area " << A << " at pressure " << P;
      throw DomainError(os.str(), x, t, P);
    }
    const double A_P = p_.beta / P;
    const double A_x = area_.derivative(x);
    Coefficients co;
    co.a = 1.0 / A_P;
    co.b = A / p_.rho - Q * Q * A_P / (A * A);
    co.c = Q / A;
    co.f = 0.0;
    co.g = Q * Q * A_x / (A * A) - 8.0 * std::numbers::pi * p_.mu * Q / (p_.rho * A);
    return co;
  }

private:
  BloodFlowParams p_;
  AreaProfile area_;
};

// ---------------------------------------------------------------------------
// Manufactured solutions

/// Replaces the base model's forcing so that (pstar, qstar) solves the system exactly.
class ManufacturedModel final : public CoefficientModel {
public:
  ManufacturedModel(ModelPtr base, Field pstar, Field qstar)
      : base_(std::move(base)), pstar_(std::move(pstar)), qstar_(std::move(qstar)) {
    if (!base_) throw std::invalid_argument("manufactured model needs a base model");
  }

  Coefficients eval(double x, double t, double P, double Q) const override {
    Coefficients co = base_->eval(x, t, P, Q);
    const auto [f, g] = forcing(x, t);
    co.f = f;
    co.g = g;
    return co;
  }

  std::pair<double, double> forcing(double x, double t) const {
    const Coefficients star = base_->eval(x, t, pstar_.value(x, t), qstar_.value(x, t));
    const double qx = qstar_.dx(x, t);
    const double f = pstar_.dt(x, t) + star.a * qx;
    const double g = qstar_.dt(x, t) + star.b * pstar_.dx(x, t) + 2.0 * star.c * qx;
    return {f, g};
  }

  const Field& pstar() const noexcept { return pstar_; }
  const Field& qstar() const noexcept { return qstar_; }
  const ModelPtr& base() const noexcept { return base_; }

private:
  ModelPtr base_;
  Field pstar_;
  Field qstar_;
};

inline ModelPtr manufactured_wrap(ModelPtr base, Field pstar, Field qstar) {
  return std::make_shared<ManufacturedModel>(std::move(base), std::move(pstar), std::move(qstar));
}

/// Largest absolute residual of (pstar, qstar) in the wrapped system over the sample points.
inline double manufactured_residual(const ManufacturedModel& m, const std::vector<std::pair<double, double>>& points) {
  double worst = 0.0;
  for (const auto& [x, t] : points) {
    const double P = m.pstar().value(x, t);
    const double Q = m.qstar().value(x, t);
    const Coefficients co = m.eval(x, t, P, Q);
    const double r1 = m.pstar().dt(x, t) + co.a * m.qstar().dx(x, t) - co.f;
    const double r2 = m.qstar().dt(x, t) + co.b * m.pstar().dx(x, t) + 2.0 * co.c * m.qstar().dx(x, t) - co.g;
    worst = std::max({worst, std::abs(r1), std::abs(r2)});
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Model specifications as they appear in configuration documents

using ModelSpec = std::variant<LinearParams, BloodFlowParams>;

inline ModelPtr make_model(const ModelSpec& spec) {
  if (const auto* lin = std::get_if<LinearParams>(&spec)) return std::make_shared<LinearConstantModel>(*lin);
  return std::make_shared<BloodFlowModel>(std::get<BloodFlowParams>(spec));
}

}  // namespace vesselnet
