#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vesselnet/config.hpp"
#include "vesselnet/output.hpp"
#include "vesselnet/scheme.hpp"

namespace vesselnet {

// ---------------------------------------------------------------------------
// Chebyshev series on [0, T]

/// Interpolant through the Chebyshev-Lobatto points t_j = T/2 (1 + cos(pi j / n)), j = 0..n.
class ChebyshevSeries {
public:
  static std::vector<double> nodes(int n, double horizon) {
    std::vector<double> t(n + 1);
    for (int j = 0; j <= n; ++j) t[j] = 0.5 * horizon * (1.0 + std::cos(std::numbers::pi * j / n));
    return t;
  }

  ChebyshevSeries(const std::vector<double>& values, double horizon) : horizon_(horizon) {
    const int n = static_cast<int>(values.size()) - 1;
    if (n < 1) throw std::invalid_argument("Chebyshev series needs at least two nodes");
    coeffs_.assign(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= n; ++j) {
        const double w = (j == 0 || j == n) ? 0.5 : 1.0;
        acc += w * values[j] * std::cos(std::numbers::pi * j * k / n);
      }
      coeffs_[k] = 2.0 * acc / n;
    }
    coeffs_[0] *= 0.5;
    coeffs_[n] *= 0.5;
  }

  double operator()(double t) const {
    const double x = 2.0 * t / horizon_ - 1.0;
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;) {
      const double b0 = coeffs_[k] + 2.0 * x * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return coeffs_[0] + x * b1 - b2;
  }

  /// The antiderivative vanishing at t = 0.
  ChebyshevSeries integral() const {
    const std::size_t n = coeffs_.size();
    auto c = [&](std::size_t k) { return k < n ? coeffs_[k] : 0.0; };
    std::vector<double> b(n + 1, 0.0);
    const double scale = 0.5 * horizon_;
    b[1] = scale * (c(0) - 0.5 * c(2));
    for (std::size_t k = 2; k <= n; ++k) b[k] = scale * (c(k - 1) - c(k + 1)) / (2.0 * static_cast<double>(k));
    double at_start = 0.0;
    for (std::size_t k = 1; k <= n; ++k) at_start += (k % 2 == 0 ? 1.0 : -1.0) * b[k];
    b[0] = -at_start;
    return ChebyshevSeries(std::move(b), horizon_, 0);
  }

  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

private:
  ChebyshevSeries(std::vector<double> coeffs, double horizon, int) : horizon_(horizon), coeffs_(std::move(coeffs)) {}

  double horizon_;
  std::vector<double> coeffs_;
};

// ---------------------------------------------------------------------------
// Characteristics oracle for one linear constant-coefficient branch

struct OracleProblem {
  LinearParams model;
  SourceKind source = PressureBC{Signal::constant(0.0)};
  TerminalKind terminal = PressureBC{Signal::constant(0.0)};
  InitialProfile p_init = Field{};
  InitialProfile q_init = Field{};
  double horizon = 0.0;
};

/// Exact solution by transport of r and s along straight characteristics, with at most
/// one reflection per family. With constant coefficients the forcing along either family
/// is the constant dR or dL, so those integrals are exact. A windkessel terminal couples
/// the outgoing trace to its own history; that trace is found by Picard iteration on the
/// integrated closure, represented as a Chebyshev series over [0, T].
class OracleSolution {
public:
  static constexpr int kNodes = 64;
  static constexpr double kTolerance = 1e-10;
  static constexpr int kMaxIterations = 200;

  explicit OracleSolution(OracleProblem prob) : prob_(std::move(prob)) {
    co_ = {prob_.model.a, prob_.model.b, prob_.model.c, prob_.model.f, prob_.model.g};
    if (!(co_.a > 0.0)) throw VerificationError("oracle requires a > 0");
    try {
      e_ = eigen(co_);
    } catch (const HyperbolicityLoss& err) {
      throw VerificationError(std::string("oracle: ") + err.what());
    }
    if (!(e_.lambda_l < 0.0 && e_.lambda_r > 0.0)) {
      throw VerificationError("oracle requires lambda_l < 0 < lambda_r");
    }
    d_ = normal_rhs(co_, e_);
    const double limit = std::min(1.0 / e_.lambda_r, -1.0 / e_.lambda_l);
    if (!(prob_.horizon >= 0.0) || prob_.horizon > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "oracle horizon " << prob_.horizon << " exceeds the single-reflection limit " << limit;
      throw VerificationError(os.str());
    }
    if (const auto* wk = std::get_if<WindkesselBC>(&prob_.terminal)) solve_windkessel(*wk);
  }

  PQ operator()(double x, double t) const { return from_riemann({r(x, t), s(x, t)}, co_, e_); }

  double r(double x, double t) const {
    check_point(x, t);
    const double xi = x - e_.lambda_r * t;
    if (xi >= 0.0) return r_init(xi) + d_.right * t;
    const double tau = t - x / e_.lambda_r;
    return r0(tau) + d_.right * (t - tau);
  }

  double s(double x, double t) const {
    check_point(x, t);
    const double xi = x - e_.lambda_l * t;
    if (xi <= 1.0) return s_init(xi) + d_.left * t;
    const double tau = t - (x - 1.0) / e_.lambda_l;
    return s1(tau) + d_.left * (t - tau);
  }

  const EigenData& eigen_data() const noexcept { return e_; }
  const std::vector<double>& picard_distances() const noexcept { return distances_; }
  int iterations() const noexcept { return static_cast<int>(distances_.size()); }

private:
  void check_point(double x, double t) const {
    if (!(x >= -1e-12 && x <= 1.0 + 1e-12 && t >= -1e-12 && t <= prob_.horizon * (1.0 + 1e-12) + 1e-12)) {
      throw VerificationError("oracle evaluated outside [0,1] x [0,T]");
    }
  }

  double r_init(double xi) const {
    return to_riemann(initial_value(prob_.p_init, xi), initial_value(prob_.q_init, xi), co_, e_).r;
  }
  double s_init(double xi) const {
    return to_riemann(initial_value(prob_.p_init, xi), initial_value(prob_.q_init, xi), co_, e_).s;
  }

  /// Incoming traces: s at x = 0 and r at x = 1, both straight from the initial data.
  double s0(double tau) const { return s_init(-e_.lambda_l * tau) + d_.left * tau; }
  double r1(double tau) const { return r_init(1.0 - e_.lambda_r * tau) + d_.right * tau; }

  double r0(double tau) const {
    const double u2 = 2.0 * e_.u;
    const double sv = s0(tau);
    if (const auto* p = std::get_if<PressureBC>(&prob_.source)) return u2 * p->signal.value(tau) + sv;
    const double q = std::get<FlowBC>(prob_.source).signal.value(tau);
    return (u2 * co_.a * q + e_.lambda_l * sv) / e_.lambda_r;
  }

  double s1(double tau) const {
    const double u2 = 2.0 * e_.u;
    if (const auto* p = std::get_if<PressureBC>(&prob_.terminal)) return r1(tau) - u2 * p->signal.value(tau);
    if (const auto* f = std::get_if<FlowBC>(&prob_.terminal)) {
      return (e_.lambda_r * r1(tau) - u2 * co_.a * f->signal.value(tau)) / e_.lambda_l;
    }
    return (*trace_)(tau);
  }

  // P - eta Q = m r + n s, and d/dt (P - eta Q) = W - delta P + epsilon Q at x = 1.
  void solve_windkessel(const WindkesselBC& wk) {
    const double T = prob_.horizon;
    const double a = co_.a, u = e_.u, lL = e_.lambda_l, lR = e_.lambda_r;
    const double m = (a - wk.eta * lR) / (2.0 * u * a);
    const double n = -(a - wk.eta * lL) / (2.0 * u * a);
    const double k0 = initial_value(prob_.p_init, 1.0) - wk.eta * initial_value(prob_.q_init, 1.0);
    if (T == 0.0) {
      trace_.emplace(std::vector<double>(kNodes + 1, s_init(1.0)), 1.0);
      return;
    }
    const auto t = ChebyshevSeries::nodes(kNodes, T);
    std::vector<double> r_trace(t.size()), w(t.size()), sv(t.size(), s_init(1.0)), integrand(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      r_trace[j] = r1(t[j]);
      w[j] = wk.w.value(t[j]);
    }
    for (int it = 0; it < kMaxIterations; ++it) {
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double p = (r_trace[j] - sv[j]) / (2.0 * u);
        const double q = (lR * r_trace[j] - lL * sv[j]) / (2.0 * u * a);
        integrand[j] = w[j] - wk.delta * p + wk.epsilon * q;
      }
      const ChebyshevSeries integral = ChebyshevSeries(integrand, T).integral();
      double dist = 0.0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double next = (k0 + integral(t[j]) - m * r_trace[j]) / n;
        dist = std::max(dist, std::abs(next - sv[j]));
        sv[j] = next;
      }
      distances_.push_back(dist);
      const std::size_t i = distances_.size() - 1;
      if (i >= 3 && distances_[i] > distances_[i - 1] && distances_[i] > 1e-13) {
        std::ostringstream os;
        os.precision(17);
        os << "oracle Picard distance increased at iteration " << i + 1 << ": " << distances_[i - 1] << " -> "
           << distances_[i];
        throw VerificationError(os.str());
      }
      if (dist < kTolerance) {
        trace_.emplace(sv, T);
        return;
      }
    }
    std::ostringstream os;
    os.precision(17);
    os << "oracle Picard iteration did not converge in " << kMaxIterations << " iterations (last distance "
       << distances_.back() << ")";
    throw VerificationError(os.str());
  }

  OracleProblem prob_;
  Coefficients co_;
  EigenData e_;
  NormalRhs d_;
  std::optional<ChebyshevSeries> trace_;
  std::vector<double> distances_;
};

inline OracleSolution characteristics_oracle(const OracleProblem& prob) { return OracleSolution(prob); }

/// Oracle problem for a one-branch network with a linear model.
inline OracleProblem oracle_problem_from(const Network& net, const InitialData& init, double horizon) {
  if (net.branches.size() != 1 || net.sources.size() != 1 || net.terminals.size() != 1) {
    throw VerificationError("oracle reference needs one branch with one source and one terminal");
  }
  const auto* lin = std::get_if<LinearParams>(&net.branches[0].model);
  if (!lin) throw VerificationError("oracle reference needs a linear constant-coefficient model");
  OracleProblem prob;
  prob.model = *lin;
  prob.source = net.sources[0].kind;
  prob.terminal = net.terminals[0].kind;
  prob.p_init = init.pressure[0];
  prob.q_init = init.flow[0];
  prob.horizon = horizon;
  return prob;
}

// ---------------------------------------------------------------------------
// Convergence studies

/// Reference solution by branch index.
using Reference = std::function<PQ(std::size_t branch, double x, double t)>;

struct StudyProblem {
  Network network;  ///< branch cell counts are replaced at each level
  std::vector<ModelPtr> models;
  InitialData initial;
  double horizon = 0.5;
  double sigma = 0.5;  ///< k / h, fixed across levels
  WindkesselClosure closure = WindkesselClosure::Trapezoidal;
  double order_low = 0.8;
  double order_high = 1.3;
  std::string label;
};

struct LevelResult {
  int cells = 0;
  double h = 0.0;
  double dt = 0.0;
  long steps = 0;
  double error = 0.0;
  double max_speed = 0.0;
  double max_junction_residual = 0.0;
  bool port_pressures_identical = true;
  double min_junction_determinant = std::numeric_limits<double>::infinity();
  double max_windkessel_determinant = -std::numeric_limits<double>::infinity();
};

struct ConvergenceReport {
  std::string label;
  double horizon = 0.0;
  double sigma = 0.0;
  std::vector<LevelResult> levels;
  std::vector<double> orders;  ///< log2(e_h / e_{h/2}); NaN when both errors vanish
  double order_low = 0.8;
  double order_high = 1.3;
  bool passed = false;
  std::optional<AbortRecord> abort;
};

/// Throws std::invalid_argument unless levels are >= 2 and each doubles the previous.
inline void check_levels(const std::vector<int>& levels) {
  if (levels.size() < 2) throw std::invalid_argument("at least two levels are required");
  if (levels.front() < 2) throw std::invalid_argument("levels must be >= 2 cells");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] != 2 * levels[i - 1]) {
      throw std::invalid_argument("levels must double: " + std::to_string(levels[i - 1]) + " then " +
                                  std::to_string(levels[i]));
    }
  }
}

/// Largest k <= sigma h that divides the horizon into whole steps.
inline double step_for_horizon(double horizon, double sigma, double h) {
  const double target = sigma * h;
  if (!(horizon > 0.0)) return target;
  return horizon / std::ceil(horizon / target - 1e-9);
}

/// Largest characteristic speed over states sampled from `sample` on [0,1] x [0,T].
inline double sampled_max_speed(const std::vector<ModelPtr>& models, const Reference& sample, double horizon) {
  double best = 0.0;
  for (std::size_t b = 0; b < models.size(); ++b) {
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double x = i / 100.0, t = horizon * j / 20.0;
        const PQ v = sample(b, x, t);
        best = std::max(best, speed_bound(eigen(models[b]->eval(x, t, v.p, v.q))));
      }
    }
  }
  return best;
}

struct LevelRun {
  Solver solver;
  RunResult result;
};

inline LevelRun run_level(const StudyProblem& prob, int cells, const std::vector<InitialProfile>* p_override = nullptr) {
  Network net = prob.network;
  for (auto& b : net.branches) b.cells = cells;
  const double h = 1.0 / cells;
  SolverOptions opts;
  opts.dt = step_for_horizon(prob.horizon, prob.sigma, h);
  opts.closure = prob.closure;
  Solver solver(std::move(net), prob.models, opts);
  GridState init = solver.make_state(p_override ? *p_override : prob.initial.pressure, prob.initial.flow);
  RunOptions ro;
  ro.horizon = prob.horizon;
  RunResult res = run(solver, std::move(init), ro);
  return {std::move(solver), std::move(res)};
}

inline double max_error(const GridState& s, const Reference& ref, double t) {
  double err = 0.0;
  for (std::size_t b = 0; b < s.branches.size(); ++b) {
    const auto& br = s.branches[b];
    const int cells = static_cast<int>(br.p.size()) - 1;
    for (int n = 0; n <= cells; ++n) {
      const PQ exact = ref(b, static_cast<double>(n) / cells, t);
      err = std::max({err, std::abs(br.p[n] - exact.p), std::abs(br.q[n] - exact.q)});
    }
  }
  return err;
}

inline void finish_report(ConvergenceReport& rep) {
  rep.orders.clear();
  bool ok = !rep.abort.has_value() && rep.levels.size() >= 2;
  for (std::size_t i = 1; i < rep.levels.size(); ++i) {
    const double e0 = rep.levels[i - 1].error, e1 = rep.levels[i].error;
    if (e0 <= 1e-13 && e1 <= 1e-13) {
      rep.orders.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double order = std::log2(e0 / e1);
    rep.orders.push_back(order);
    ok = ok && order >= rep.order_low && order <= rep.order_high;
  }
  rep.passed = ok;
}

inline LevelResult level_result(const LevelRun& lr, int cells, double error) {
  LevelResult out;
  out.cells = cells;
  out.h = 1.0 / cells;
  out.dt = lr.solver.dt();
  out.steps = lr.result.steps;
  out.error = error;
  out.max_speed = lr.result.max_speed;
  out.max_junction_residual = lr.result.max_junction_residual;
  out.port_pressures_identical = lr.result.port_pressures_identical;
  out.min_junction_determinant = lr.result.min_junction_determinant;
  out.max_windkessel_determinant = lr.result.max_windkessel_determinant;
  return out;
}

/// Runs every level against `ref` and measures the max-norm error over all nodes at T.
inline ConvergenceReport convergence_study(const StudyProblem& prob, const std::vector<int>& levels,
                                           const Reference& ref) {
  check_levels(levels);
  ConvergenceReport rep;
  rep.label = prob.label;
  rep.horizon = prob.horizon;
  rep.sigma = prob.sigma;
  rep.order_low = prob.order_low;
  rep.order_high = prob.order_high;
  for (int cells : levels) {
    const LevelRun lr = run_level(prob, cells);
    if (lr.result.abort) {
      rep.abort = lr.result.abort;
      break;
    }
    rep.levels.push_back(level_result(lr, cells, max_error(lr.result.final_state, ref, lr.result.end_time)));
  }
  finish_report(rep);
  return rep;
}

/// Reference from a finer run: nodes of coarse levels coincide with fine nodes.
inline ConvergenceReport self_convergence_study(const StudyProblem& prob, const std::vector<int>& levels,
                                                const StudyProblem& reference_prob, int reference_cells) {
  check_levels(levels);
  if (reference_cells % levels.back() != 0) throw std::invalid_argument("reference level must refine every level");
  const LevelRun fine = run_level(reference_prob, reference_cells);
  if (fine.result.abort) {
    ConvergenceReport rep;
    rep.label = prob.label;
    rep.abort = fine.result.abort;
    return rep;
  }
  const GridState& fs = fine.result.final_state;
  Reference ref = [&fs, reference_cells](std::size_t b, double x, double) {
    const auto n = static_cast<std::size_t>(std::lround(x * reference_cells));
    return PQ{fs.branches[b].p[n], fs.branches[b].q[n]};
  };
  return convergence_study(prob, levels, ref);
}

struct WindkesselComparison {
  ConvergenceReport trapezoidal;
  ConvergenceReport explicit_closure;
  int reference_cells = 0;
};

/// Both closures against a trapezoidal self-reference at 4x the finest level.
/// The explicit closure's report is informational only.
inline WindkesselComparison windkessel_variant_comparison(const StudyProblem& prob, const std::vector<int>& levels) {
  check_levels(levels);
  const bool has_wk = std::any_of(prob.network.terminals.begin(), prob.network.terminals.end(),
                                  [](const TerminalSpec& t) { return std::holds_alternative<WindkesselBC>(t.kind); });
  if (!has_wk) throw std::invalid_argument("windkessel comparison needs a windkessel terminal");
  WindkesselComparison out;
  out.reference_cells = 4 * levels.back();
  StudyProblem trap = prob, expl = prob;
  trap.closure = WindkesselClosure::Trapezoidal;
  trap.label = prob.label + " (trapezoidal closure)";
  expl.closure = WindkesselClosure::Explicit;
  expl.label = prob.label + " (explicit closure)";
  out.trapezoidal = self_convergence_study(trap, levels, trap, out.reference_cells);
  out.explicit_closure = self_convergence_study(expl, levels, trap, out.reference_cells);
  return out;
}

// ---------------------------------------------------------------------------
// Stability probe

struct StabilityReport {
  std::string label;
  int cells = 0;
  double horizon = 0.0;
  std::vector<double> eps;
  std::vector<double> deviation;
  std::vector<double> ratio;  ///< deviation / eps
  double spread = 0.0;        ///< max ratio / min ratio
  bool passed = false;
  std::optional<AbortRecord> abort;
};

/// Deviation at T of runs whose initial pressure is perturbed by eps * bump(x), on every branch.
inline StabilityReport stability_probe(const StudyProblem& prob, int cells, const std::vector<double>& eps,
                                       const Field& bump) {
  StabilityReport rep;
  rep.label = prob.label;
  rep.cells = cells;
  rep.horizon = prob.horizon;
  rep.eps = eps;
  const LevelRun base = run_level(prob, cells);
  if (base.result.abort) {
    rep.abort = base.result.abort;
    return rep;
  }
  const GridState& b0 = base.result.final_state;
  for (double e : eps) {
    std::vector<InitialProfile> pressure;
    for (std::size_t i = 0; i < prob.initial.pressure.size(); ++i) {
      ProfileTable table;
      for (int n = 0; n <= cells; ++n) {
        const double x = static_cast<double>(n) / cells;
        table.xs.push_back(x);
        table.values.push_back(initial_value(prob.initial.pressure[i], x) + e * bump.value(x, 0.0));
      }
      pressure.emplace_back(std::move(table));
    }
    const LevelRun pert = run_level(prob, cells, &pressure);
    if (pert.result.abort) {
      rep.abort = pert.result.abort;
      return rep;
    }
    double d = 0.0;
    const GridState& s = pert.result.final_state;
    for (std::size_t i = 0; i < s.branches.size(); ++i) {
      for (std::size_t n = 0; n < s.branches[i].p.size(); ++n) {
        d = std::max({d, std::abs(s.branches[i].p[n] - b0.branches[i].p[n]),
                      std::abs(s.branches[i].q[n] - b0.branches[i].q[n])});
      }
    }
    rep.deviation.push_back(d);
    rep.ratio.push_back(e != 0.0 ? d / e : 0.0);
  }
  std::vector<double> positive;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (eps[i] != 0.0) positive.push_back(rep.ratio[i]);
  }
  if (!positive.empty()) {
    const auto [lo, hi] = std::minmax_element(positive.begin(), positive.end());
    rep.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    rep.passed = *lo > 0.0 && rep.spread <= 2.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Problems from configuration documents

namespace verify_detail {

inline Signal trace(const std::string& label, const Field& f, double x) {
  return Signal::function(
      label, [f, x](double t) { return f.value(x, t); }, [f, x](double t) { return f.dt(x, t); });
}

}  // namespace verify_detail

/// Manufactured problem: every branch's forcing is replaced so that the document's
/// fields solve the system, boundary signals become traces of the fields, and the
/// initial data are the fields at t = 0. sigma = courant / (sampled max speed).
inline std::pair<StudyProblem, Reference> manufactured_problem(const Config& cfg) {
  const Network& src = cfg.network;
  std::vector<Field> ps, qs;
  for (const auto& b : src.branches) {
    auto it = cfg.study.manufactured.find(b.id);
    if (it == cfg.study.manufactured.end()) {
      throw ConfigError("/study/manufactured: no fields for branch '" + b.id + "'");
    }
    ps.push_back(it->second.p);
    qs.push_back(it->second.q);
  }
  StudyProblem prob;
  prob.network = src;
  prob.horizon = cfg.study.horizon;
  prob.order_low = cfg.study.order_low;
  prob.order_high = cfg.study.order_high;
  prob.closure = cfg.run.explicit_windkessel ? WindkesselClosure::Explicit : WindkesselClosure::Trapezoidal;
  prob.label = "manufactured";
  for (std::size_t i = 0; i < src.branches.size(); ++i) {
    prob.models.push_back(manufactured_wrap(make_model(src.branches[i].model), ps[i], qs[i]));
    prob.initial.pressure.emplace_back(ps[i]);
    prob.initial.flow.emplace_back(qs[i]);
  }
  for (auto& s : prob.network.sources) {
    const std::size_t i = src.branch_index(s.branch);
    if (std::holds_alternative<PressureBC>(s.kind)) {
      s.kind = PressureBC{verify_detail::trace("P*(" + s.branch + ",0,t)", ps[i], 0.0)};
    } else {
      s.kind = FlowBC{verify_detail::trace("Q*(" + s.branch + ",0,t)", qs[i], 0.0)};
    }
  }
  for (auto& term : prob.network.terminals) {
    const std::size_t i = src.branch_index(term.branch);
    if (std::holds_alternative<PressureBC>(term.kind)) {
      term.kind = PressureBC{verify_detail::trace("P*(" + term.branch + ",1,t)", ps[i], 1.0)};
    } else if (std::holds_alternative<FlowBC>(term.kind)) {
      term.kind = FlowBC{verify_detail::trace("Q*(" + term.branch + ",1,t)", qs[i], 1.0)};
    } else {
      WindkesselBC& wk = std::get<WindkesselBC>(term.kind);
      const Field p = ps[i], q = qs[i];
      const double eta = wk.eta, delta = wk.delta, epsilon = wk.epsilon;
      auto w = [=](double t) {
        return p.dt(1.0, t) - eta * q.dt(1.0, t) + delta * p.value(1.0, t) - epsilon * q.value(1.0, t);
      };
      wk.w = Signal::function(
          "W*(" + term.branch + ",t)", w, [w](double t) { return (w(t + 1e-6) - w(t - 1e-6)) / 2e-6; });
    }
  }
  Reference ref = [ps, qs](std::size_t b, double x, double t) { return PQ{ps[b].value(x, t), qs[b].value(x, t)}; };
  prob.sigma = cfg.study.courant / sampled_max_speed(prob.models, ref, prob.horizon);
  return {std::move(prob), std::move(ref)};
}

/// Plain problem: the document's own models, boundaries and initial data.
/// sigma = courant / (max speed of the initial state).
inline StudyProblem plain_problem(const Config& cfg) {
  StudyProblem prob;
  prob.network = cfg.network;
  prob.models = Solver::default_models(cfg.network);
  prob.initial = cfg.initial;
  prob.horizon = cfg.study.horizon;
  prob.order_low = cfg.study.order_low;
  prob.order_high = cfg.study.order_high;
  prob.closure = cfg.run.explicit_windkessel ? WindkesselClosure::Explicit : WindkesselClosure::Trapezoidal;
  prob.label = "plain";
  const InitialData init = cfg.initial;
  Reference initial_state = [init](std::size_t b, double x, double) {
    return PQ{initial_value(init.pressure[b], x), initial_value(init.flow[b], x)};
  };
  prob.sigma = cfg.study.courant / sampled_max_speed(prob.models, initial_state, 0.0);
  return prob;
}

// ---------------------------------------------------------------------------
// Report rendering

inline Json convergence_json(const ConvergenceReport& rep) {
  Json levels = Json::array();
  for (const auto& l : rep.levels) {
    levels.push_back({{"N", l.cells}, {"h", l.h}, {"error", l.error}, {"dt", l.dt}, {"steps", l.steps}});
  }
  Json orders = Json::array();
  for (double o : rep.orders) orders.push_back(std::isnan(o) ? Json(nullptr) : Json(o));
  Json j;
  j["label"] = rep.label;
  j["horizon"] = rep.horizon;
  j["sigma"] = rep.sigma;
  j["horizon_over_half_sigma"] = rep.sigma > 0.0 ? rep.horizon / (0.5 * rep.sigma) : 0.0;
  j["levels"] = levels;
  j["orders"] = orders;
  j["order_window"] = {rep.order_low, rep.order_high};
  j["passed"] = rep.passed;
  if (rep.abort) j["abort"] = abort_json(*rep.abort);
  return j;
}

inline std::string convergence_table(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << rep.label << ": T = " << rep.horizon << ", sigma = " << std::setprecision(6) << rep.sigma
     << ", T/(sigma/2) = " << (rep.sigma > 0.0 ? rep.horizon / (0.5 * rep.sigma) : 0.0) << "\n";
  os << std::setw(8) << "N" << std::setw(14) << "h" << std::setw(16) << "error" << std::setw(10) << "order" << "\n";
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& l = rep.levels[i];
    os << std::setw(8) << l.cells << std::setw(14) << std::setprecision(6) << l.h << std::setw(16)
       << std::scientific << std::setprecision(6) << l.error << std::defaultfloat;
    if (i > 0) {
      const double o = rep.orders[i - 1];
      os << std::setw(10) << std::fixed << std::setprecision(3);
      if (std::isnan(o)) {
        os << "-";
      } else {
        os << o;
      }
      os << std::defaultfloat;
    }
    os << "\n";
  }
  if (rep.abort) os << "aborted: " << SolverAbort(*rep.abort).what() << "\n";
  os << "order window [" << rep.order_low << ", " << rep.order_high << "]: " << (rep.passed ? "passed" : "FAILED")
     << "\n";
  return os.str();
}

inline Json stability_json(const StabilityReport& rep) {
  Json j;
  j["label"] = rep.label;
  j["N"] = rep.cells;
  j["horizon"] = rep.horizon;
  j["eps"] = rep.eps;
  j["deviation"] = rep.deviation;
  j["ratio"] = rep.ratio;
  j["spread"] = rep.spread;
  j["passed"] = rep.passed;
  if (rep.abort) j["abort"] = abort_json(*rep.abort);
  return j;
}

inline std::string stability_table(const StabilityReport& rep) {
  std::ostringstream os;
  os << rep.label << ": N = " << rep.cells << ", T = " << rep.horizon << "\n";
  os << std::setw(12) << "eps" << std::setw(16) << "D(eps)" << std::setw(16) << "D/eps" << "\n";
  os << std::scientific << std::setprecision(6);
  for (std::size_t i = 0; i < rep.deviation.size(); ++i) {
    os << std::setw(12) << rep.eps[i] << std::setw(16) << rep.deviation[i] << std::setw(16) << rep.ratio[i] << "\n";
  }
  os << std::defaultfloat;
  if (rep.abort) os << "aborted: " << SolverAbort(*rep.abort).what() << "\n";
  os << "ratio spread " << rep.spread << " (limit 2): " << (rep.passed ? "passed" : "FAILED") << "\n";
  return os.str();
}

}  // namespace vesselnet
