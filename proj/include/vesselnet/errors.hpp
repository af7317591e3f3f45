#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace vesselnet {

/// Malformed configuration document: syntax errors, unresolved ids, missing fields.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    std::ostringstream os;
    os << "line " << line << ", column " << column << ": " << what;
    return os.str();
  }

  int line_;
  int column_;
};

/// A coefficient model was evaluated outside its admissible domain
/// (non-positive pressure, collapsed vessel area, ...).
class DomainError : public std::runtime_error {
public:
  DomainError(const std::string& what, double x, double t, double pressure)
      : std::runtime_error(what), x_(x), t_(t), pressure_(pressure) {}

  double x() const noexcept { return x_; }
  double t() const noexcept { return t_; }
  double pressure() const noexcept { return pressure_; }

private:
  double x_;
  double t_;
  double pressure_;
};

/// c^2 + ab is not safely positive: the characteristic speeds are not real and distinct.
class HyperbolicityLoss : public std::runtime_error {
public:
  explicit HyperbolicityLoss(double discriminant)
      : std::runtime_error(message(discriminant)), discriminant_(discriminant) {}

  double discriminant() const noexcept { return discriminant_; }

private:
  static std::string message(double d) {
    std::ostringstream os;
    os.precision(17);
    os << "hyperbolicity lost: c^2 + ab = " << d;
    return os.str();
  }

  double discriminant_;
};

enum class AbortKind {
  Cfl,
  Hyperbolicity,
  BoundarySign,
  Domain,
  Blowup,
  NonFinite,
  JunctionSingular,
};

inline const char* to_string(AbortKind kind) {
  switch (kind) {
    case AbortKind::Cfl: return "cfl_violation";
    case AbortKind::Hyperbolicity: return "hyperbolicity_loss";
    case AbortKind::BoundarySign: return "boundary_sign_violation";
    case AbortKind::Domain: return "domain_error";
    case AbortKind::Blowup: return "blowup";
    case AbortKind::NonFinite: return "non_finite";
    case AbortKind::JunctionSingular: return "junction_singular";
  }
  return "unknown";
}

/// Where and why the time stepper stopped.
struct AbortRecord {
  AbortKind kind = AbortKind::NonFinite;
  std::string branch;
  int node = -1;
  double time = 0.0;
  std::string detail;
};

class SolverAbort : public std::runtime_error {
public:
  explicit SolverAbort(AbortRecord record)
      : std::runtime_error(message(record)), record_(std::move(record)) {}

  const AbortRecord& record() const noexcept { return record_; }

private:
  static std::string message(const AbortRecord& r) {
    std::ostringstream os;
    os.precision(17);
    os << to_string(r.kind) << " at branch '" << r.branch << "', node " << r.node << ", t = " << r.time;
    if (!r.detail.empty()) os << ": " << r.detail;
    return os.str();
  }

  AbortRecord record_;
};

/// A verification procedure could not produce its result (oracle out of range, no convergence).
class VerificationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace vesselnet
