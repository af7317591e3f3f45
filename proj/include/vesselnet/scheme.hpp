#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vesselnet/characteristics.hpp"
#include "vesselnet/errors.hpp"
#include "vesselnet/linalg.hpp"
#include "vesselnet/network.hpp"

namespace vesselnet {

// Explicit characteristic finite-difference scheme. At node n of a branch, with
// level-m coefficients, the right-going relation (upwind toward n-1)
//
//   (1/k)[-lL dp + a dq] + (lR/h)[-lL (p_n - p_{n-1}) + a (q_n - q_{n-1})] = dR
//
// holds for n = 1..N and the left-going relation (upwind toward n+1)
//
//   (1/k)[-lR dp + a dq] + (lL/h)[-lR (p_{n+1} - p_n) + a (q_{n+1} - q_n)] = dL
//
// for n = 0..N-1, where dp, dq are the increments from level m to m+1.

struct BranchState {
  std::vector<double> p;
  std::vector<double> q;
  bool operator==(const BranchState&) const = default;
};

struct GridState {
  long step = 0;
  double time = 0.0;
  std::vector<BranchState> branches;
};

/// Coefficients, characteristic speeds and normal-form sources at one node, level m.
struct NodeEval {
  Coefficients co;
  EigenData e;
  NormalRhs d;
};

inline NodeEval evaluate_node(const Coefficients& co) {
  const EigenData e = eigen(co);
  return {co, e, normal_rhs(co, e)};
}

struct StepSizes {
  double k = 0.0;  ///< time step, shared by all branches
  double h = 0.0;  ///< spatial step of the branch, 1/N

  double sigma() const noexcept { return k / h; }
};

/// alpha with  -lL dp + a dq = alpha  from the right-going relation at node n (n >= 1).
inline double right_going_rhs(const BranchState& s, std::size_t n, const NodeEval& ev, const StepSizes& sz) {
  const double dp = s.p[n] - s.p[n - 1];
  const double dq = s.q[n] - s.q[n - 1];
  return sz.k * ev.d.right - sz.sigma() * ev.e.lambda_r * (-ev.e.lambda_l * dp + ev.co.a * dq);
}

/// beta with  -lR dp + a dq = beta  from the left-going relation at node n (n <= N-1).
inline double left_going_rhs(const BranchState& s, std::size_t n, const NodeEval& ev, const StepSizes& sz) {
  const double dp = s.p[n + 1] - s.p[n];
  const double dq = s.q[n + 1] - s.q[n];
  return sz.k * ev.d.left - sz.sigma() * ev.e.lambda_l * (-ev.e.lambda_r * dp + ev.co.a * dq);
}

inline PQ interior_update(const BranchState& s, std::size_t n, const NodeEval& ev, const StepSizes& sz) {
  const double alpha = right_going_rhs(s, n, ev, sz);
  const double beta = left_going_rhs(s, n, ev, sz);
  // Cramer on [[-lL, a], [-lR, a]]: determinant a (lR - lL) > 0.
  const double dp = (alpha - beta) / (ev.e.lambda_r - ev.e.lambda_l);
  const double dq = (alpha + ev.e.lambda_l * dp) / ev.co.a;
  return {s.p[n] + dp, s.q[n] + dq};
}

enum class Prescribed { Pressure, Flow };

/// x = 0 source: the prescribed quantity is imposed, the other follows from the left-going relation.
inline PQ source_update(const BranchState& s, Prescribed kind, double value, const NodeEval& ev, const StepSizes& sz) {
  const double beta = left_going_rhs(s, 0, ev, sz);
  if (kind == Prescribed::Pressure) {
    const double dp = value - s.p[0];
    return {value, s.q[0] + (beta + ev.e.lambda_r * dp) / ev.co.a};
  }
  const double dq = value - s.q[0];
  return {s.p[0] + (ev.co.a * dq - beta) / ev.e.lambda_r, value};
}

/// x = 1 terminal with prescribed pressure or flow; the other follows from the right-going relation.
inline PQ terminal_update(const BranchState& s, Prescribed kind, double value, const NodeEval& ev,
                          const StepSizes& sz) {
  const std::size_t n = s.p.size() - 1;
  const double alpha = right_going_rhs(s, n, ev, sz);
  if (kind == Prescribed::Pressure) {
    const double dp = value - s.p[n];
    return {value, s.q[n] + (alpha + ev.e.lambda_l * dp) / ev.co.a};
  }
  const double dq = value - s.q[n];
  return {s.p[n] + (ev.co.a * dq - alpha) / ev.e.lambda_l, value};
}

struct WindkesselSolution {
  PQ value;
  double determinant = 0.0;
};

/// Windkessel terminal: right-going relation at n = N together with the
/// time-centered closure
///   (p' - p)/k - eta (q' - q)/k + delta (p' + p)/2 - epsilon (q' + q)/2 = W((m + 1/2) k).
/// `w_half` is W at the half step.
inline WindkesselSolution windkessel_update(const BranchState& s, const WindkesselBC& wk, double w_half,
                                            const NodeEval& ev, const StepSizes& sz) {
  const std::size_t n = s.p.size() - 1;
  const double k = sz.k;
  const double m11 = -ev.e.lambda_l / k, m12 = ev.co.a / k;
  const double m21 = 1.0 / k + 0.5 * wk.delta, m22 = -wk.eta / k - 0.5 * wk.epsilon;
  const double r1 = right_going_rhs(s, n, ev, sz) / k;
  const double r2 = w_half - wk.delta * s.p[n] + wk.epsilon * s.q[n];
  const double det = m11 * m22 - m12 * m21;
  const double dp = (r1 * m22 - m12 * r2) / det;
  const double dq = (m11 * r2 - m21 * r1) / det;
  return {{s.p[n] + dp, s.q[n] + dq}, det};
}

/// Non-centered variant  (p' - p)/k - eta (q' - q)/k + delta p - epsilon q = W(m k).
/// Kept for comparison studies only.
inline WindkesselSolution windkessel_update_explicit(const BranchState& s, const WindkesselBC& wk, double w_now,
                                                     const NodeEval& ev, const StepSizes& sz) {
  const std::size_t n = s.p.size() - 1;
  const double k = sz.k;
  const double m11 = -ev.e.lambda_l / k, m12 = ev.co.a / k;
  const double m21 = 1.0 / k, m22 = -wk.eta / k;
  const double r1 = right_going_rhs(s, n, ev, sz) / k;
  const double r2 = w_now - wk.delta * s.p[n] + wk.epsilon * s.q[n];
  const double det = m11 * m22 - m12 * m21;
  const double dp = (r1 * m22 - m12 * r2) / det;
  const double dq = (m11 * r2 - m21 * r1) / det;
  return {{s.p[n] + dp, s.q[n] + dq}, det};
}

/// Level-m data of one junction port.
struct PortInput {
  bool incoming = true;  ///< attaches at x = 1
  double p = 0.0;        ///< p at the port node, level m
  double q = 0.0;
  NodeEval ev;
  double rhs = 0.0;  ///< alpha (incoming) or beta (outgoing) from the one-sided relation
};

struct JunctionSolution {
  double pressure = 0.0;
  std::vector<double> flows;  ///< per port, input order
  double determinant = 0.0;   ///< from the LU factorization
  double closed_form_determinant = 0.0;
  double condition = 0.0;
  double mass_residual = 0.0;  ///< |sum incoming q - sum outgoing q|
  double flow_scale = 0.0;     ///< sum |q|
};

/// Determinant of the junction system in closed form:
///   k^{-mu} (-sum_in lL/a + sum_out lR/a) prod a.
inline double junction_determinant_closed_form(const std::vector<PortInput>& ports, double k) {
  double sum = 0.0;
  double prod = 1.0;
  for (const auto& port : ports) {
    sum += port.incoming ? -port.ev.e.lambda_l / port.ev.co.a : port.ev.e.lambda_r / port.ev.co.a;
    prod *= port.ev.co.a / k;
  }
  return sum * prod;
}

/// Solves for the common pressure and all port flows: mass balance
/// (sum outgoing q - sum incoming q = 0), the right-going relation at each
/// incoming port and the left-going relation at each outgoing port.
/// Throws std::runtime_error when the system is singular or has condition > 1e12.
inline JunctionSolution junction_update(const std::vector<PortInput>& ports, double k) {
  const std::size_t mu = ports.size();
  DenseMatrix m(mu + 1);
  std::vector<double> rhs(mu + 1, 0.0);
  for (std::size_t j = 0; j < mu; ++j) {
    const PortInput& port = ports[j];
    m(0, j + 1) = port.incoming ? -1.0 : 1.0;
    const double lambda = port.incoming ? port.ev.e.lambda_l : port.ev.e.lambda_r;
    m(j + 1, 0) = -lambda / k;
    m(j + 1, j + 1) = port.ev.co.a / k;
    rhs[j + 1] = (port.rhs - lambda * port.p + port.ev.co.a * port.q) / k;
  }
  const LuDecomposition lu(m);
  JunctionSolution out;
  out.determinant = lu.determinant();
  out.closed_form_determinant = junction_determinant_closed_form(ports, k);
  out.condition = lu.condition_number();
  if (lu.singular() || !(out.condition <= 1e12)) {
    std::ostringstream os;
    os.precision(17);
    os << "junction system singular or ill-conditioned: determinant " << out.determinant << ", closed form "
       << out.closed_form_determinant << ", condition " << out.condition;
    throw std::runtime_error(os.str());
  }
  const auto x = lu.solve(rhs);
  out.pressure = x[0];
  out.flows.assign(x.begin() + 1, x.end());
  double in = 0.0, outflow = 0.0;
  for (std::size_t j = 0; j < mu; ++j) {
    (ports[j].incoming ? in : outflow) += out.flows[j];
    out.flow_scale += std::abs(out.flows[j]);
  }
  out.mass_residual = std::abs(in - outflow);
  return out;
}

// ---------------------------------------------------------------------------
// Time stepper

enum class WindkesselClosure { Trapezoidal, Explicit };

struct SolverOptions {
  double dt = 0.0;
  double blowup_bound = 1e12;
  WindkesselClosure closure = WindkesselClosure::Trapezoidal;
};

struct JunctionDiagnostics {
  double mass_residual = 0.0;
  double relative_residual = 0.0;  ///< mass_residual / (1 + sum |q|)
  double pressure_mismatch = 0.0;  ///< max |p_port - p_common| after assignment
  bool pressures_identical = true; ///< every port pressure bit-equal to the common value
  double determinant = 0.0;
  double closed_form_determinant = 0.0;
  double condition = 0.0;
};

struct EndpointSign {
  std::size_t branch = 0;
  End end = End::X0;
  bool ok = true;
  double lambda_l = 0.0;
  double lambda_r = 0.0;
};

struct StepDiagnostics {
  double time = 0.0;         ///< time of the new level
  double speed_bound = 0.0;  ///< max |lambda| over the network at level m
  std::vector<double> courant;  ///< per branch sigma_i * bound_i
  std::vector<JunctionDiagnostics> junctions;
  std::vector<EndpointSign> boundary_signs;
  std::vector<double> windkessel_determinants;
};

class Solver {
public:
  Solver(Network net, std::vector<ModelPtr> models, SolverOptions opts)
      : net_(std::move(net)), topo_(resolve_topology(net_)), models_(std::move(models)), opts_(opts) {
    if (models_.size() != net_.branches.size()) throw std::invalid_argument("one model per branch required");
    for (const auto& m : models_) {
      if (!m) throw std::invalid_argument("null coefficient model");
    }
    if (!(opts_.dt > 0.0)) throw std::invalid_argument("time step must be positive");
    for (const auto& b : net_.branches) sizes_.push_back({opts_.dt, 1.0 / b.cells});
  }

  /// Builds models from the network's own model specifications.
  static std::vector<ModelPtr> default_models(const Network& net) {
    std::vector<ModelPtr> out;
    for (const auto& b : net.branches) out.push_back(make_model(b.model));
    return out;
  }

  const Network& network() const noexcept { return net_; }
  const Topology& topology() const noexcept { return topo_; }
  const std::vector<ModelPtr>& models() const noexcept { return models_; }
  const SolverOptions& options() const noexcept { return opts_; }
  double dt() const noexcept { return opts_.dt; }
  const StepSizes& sizes(std::size_t branch) const { return sizes_[branch]; }

  GridState make_state(const std::vector<InitialProfile>& pressure, const std::vector<InitialProfile>& flow) const {
    GridState s;
    s.branches.resize(net_.branches.size());
    for (std::size_t i = 0; i < net_.branches.size(); ++i) {
      const int n_cells = net_.branches[i].cells;
      auto& b = s.branches[i];
      b.p.resize(n_cells + 1);
      b.q.resize(n_cells + 1);
      for (int n = 0; n <= n_cells; ++n) {
        const double x = static_cast<double>(n) / n_cells;
        b.p[n] = initial_value(pressure[i], x);
        b.q[n] = initial_value(flow[i], x);
      }
    }
    return s;
  }

  /// Evaluates coefficients and characteristic data at every node of level m.
  std::vector<std::vector<NodeEval>> evaluate(const GridState& s) const {
    const double t = s.step * opts_.dt;
    std::vector<std::vector<NodeEval>> evals(net_.branches.size());
    for (std::size_t i = 0; i < net_.branches.size(); ++i) {
      const auto& b = s.branches[i];
      const int n_cells = net_.branches[i].cells;
      evals[i].resize(n_cells + 1);
      for (int n = 0; n <= n_cells; ++n) {
        const double x = static_cast<double>(n) / n_cells;
        Coefficients co;
        try {
          co = models_[i]->eval(x, t, b.p[n], b.q[n]);
        } catch (const DomainError& err) {
          abort(AbortKind::Domain, i, n, t, err.what());
        }
        try {
          evals[i][n] = evaluate_node(co);
        } catch (const HyperbolicityLoss& err) {
          abort(AbortKind::Hyperbolicity, i, n, t, err.what());
        }
      }
    }
    return evals;
  }

  std::pair<GridState, StepDiagnostics> step(const GridState& s) const {
    const long m = s.step;
    const double t = m * opts_.dt;
    const double t_next = (m + 1) * opts_.dt;
    const auto evals = evaluate(s);

    StepDiagnostics diag;
    diag.time = t_next;
    diag.courant.resize(net_.branches.size());
    for (std::size_t i = 0; i < net_.branches.size(); ++i) {
      double bound = 0.0;
      int where = 0;
      for (std::size_t n = 0; n < evals[i].size(); ++n) {
        const double v = speed_bound(evals[i][n].e);
        if (v > bound) {
          bound = v;
          where = static_cast<int>(n);
        }
      }
      diag.speed_bound = std::max(diag.speed_bound, bound);
      const CflCheck cfl = cfl_check(sizes_[i].sigma(), bound);
      diag.courant[i] = cfl.courant;
      if (!cfl.ok) {
        std::ostringstream os;
        os.precision(17);
        os << "sigma * speed bound = " << sizes_[i].sigma() << " * " << bound << " = " << cfl.courant
           << " is not < 1";
        abort(AbortKind::Cfl, i, where, t, os.str());
      }
    }

    GridState next;
    next.step = m + 1;
    next.time = t_next;
    next.branches = s.branches;

    for (std::size_t i = 0; i < net_.branches.size(); ++i) {
      const auto& cur = s.branches[i];
      auto& nb = next.branches[i];
      const std::size_t N = cur.p.size() - 1;
      for (std::size_t n = 1; n < N; ++n) {
        const PQ v = interior_update(cur, n, evals[i][n], sizes_[i]);
        nb.p[n] = v.p;
        nb.q[n] = v.q;
      }
    }

    auto require_sign = [&](std::size_t branch, End end, const NodeEval& ev) {
      const BoundarySignCheck chk = check_boundary_sign(ev.e);
      diag.boundary_signs.push_back({branch, end, chk.ok, chk.lambda_l, chk.lambda_r});
      if (!chk.ok) {
        std::ostringstream os;
        os.precision(17);
        os << "need lambda_l < 0 < lambda_r at " << to_string(end) << ", got lambda_l = " << chk.lambda_l
           << ", lambda_r = " << chk.lambda_r;
        const int node = end == End::X0 ? 0 : net_.branches[branch].cells;
        abort(AbortKind::BoundarySign, branch, node, t, os.str());
      }
    };

    for (std::size_t i = 0; i < net_.branches.size(); ++i) {
      const auto& cur = s.branches[i];
      auto& nb = next.branches[i];
      const std::size_t N = cur.p.size() - 1;

      if (const EndRole role = topo_.ends[i][0]; role.kind == RoleKind::Source) {
        require_sign(i, End::X0, evals[i][0]);
        const auto& src = net_.sources[role.index];
        PQ v;
        if (const auto* pbc = std::get_if<PressureBC>(&src.kind)) {
          v = source_update(cur, Prescribed::Pressure, pbc->signal.value(t_next), evals[i][0], sizes_[i]);
        } else {
          v = source_update(cur, Prescribed::Flow, std::get<FlowBC>(src.kind).signal.value(t_next), evals[i][0],
                            sizes_[i]);
        }
        nb.p[0] = v.p;
        nb.q[0] = v.q;
      }

      if (const EndRole role = topo_.ends[i][1]; role.kind == RoleKind::Terminal) {
        require_sign(i, End::X1, evals[i][N]);
        const auto& term = net_.terminals[role.index];
        PQ v;
        if (const auto* pbc = std::get_if<PressureBC>(&term.kind)) {
          v = terminal_update(cur, Prescribed::Pressure, pbc->signal.value(t_next), evals[i][N], sizes_[i]);
        } else if (const auto* fbc = std::get_if<FlowBC>(&term.kind)) {
          v = terminal_update(cur, Prescribed::Flow, fbc->signal.value(t_next), evals[i][N], sizes_[i]);
        } else {
          const auto& wk = std::get<WindkesselBC>(term.kind);
          WindkesselSolution sol;
          if (opts_.closure == WindkesselClosure::Trapezoidal) {
            sol = windkessel_update(cur, wk, wk.w.value((m + 0.5) * opts_.dt), evals[i][N], sizes_[i]);
          } else {
            sol = windkessel_update_explicit(cur, wk, wk.w.value(t), evals[i][N], sizes_[i]);
          }
          diag.windkessel_determinants.push_back(sol.determinant);
          v = sol.value;
        }
        nb.p[N] = v.p;
        nb.q[N] = v.q;
      }
    }

    for (std::size_t j = 0; j < topo_.ports.size(); ++j) {
      const auto& ports = topo_.ports[j];
      std::vector<PortInput> inputs;
      inputs.reserve(ports.size());
      for (const Port& port : ports) {
        const auto& cur = s.branches[port.branch];
        const std::size_t node = port.incoming() ? cur.p.size() - 1 : 0;
        const NodeEval& ev = evals[port.branch][node];
        require_sign(port.branch, port.end, ev);
        PortInput in;
        in.incoming = port.incoming();
        in.p = cur.p[node];
        in.q = cur.q[node];
        in.ev = ev;
        in.rhs = port.incoming() ? right_going_rhs(cur, node, ev, sizes_[port.branch])
                                 : left_going_rhs(cur, node, ev, sizes_[port.branch]);
        inputs.push_back(in);
      }
      JunctionSolution sol;
      try {
        sol = junction_update(inputs, opts_.dt);
      } catch (const std::runtime_error& err) {
        abort(AbortKind::JunctionSingular, ports.front().branch,
              ports.front().incoming() ? net_.branches[ports.front().branch].cells : 0, t, err.what());
      }
      JunctionDiagnostics jd;
      for (std::size_t idx = 0; idx < ports.size(); ++idx) {
        auto& nb = next.branches[ports[idx].branch];
        const std::size_t node = ports[idx].incoming() ? nb.p.size() - 1 : 0;
        nb.p[node] = sol.pressure;
        nb.q[node] = sol.flows[idx];
      }
      for (const Port& port : ports) {
        const auto& nb = next.branches[port.branch];
        const double pv = port.incoming() ? nb.p.back() : nb.p.front();
        jd.pressure_mismatch = std::max(jd.pressure_mismatch, std::abs(pv - sol.pressure));
        jd.pressures_identical = jd.pressures_identical && std::memcmp(&pv, &sol.pressure, sizeof(double)) == 0;
      }
      jd.mass_residual = sol.mass_residual;
      jd.relative_residual = sol.mass_residual / (1.0 + sol.flow_scale);
      jd.determinant = sol.determinant;
      jd.closed_form_determinant = sol.closed_form_determinant;
      jd.condition = sol.condition;
      diag.junctions.push_back(jd);
    }

    for (std::size_t i = 0; i < next.branches.size(); ++i) {
      const auto& nb = next.branches[i];
      for (std::size_t n = 0; n < nb.p.size(); ++n) {
        const double p = nb.p[n], q = nb.q[n];
        if (!std::isfinite(p) || !std::isfinite(q)) {
          abort(AbortKind::NonFinite, i, static_cast<int>(n), t_next, "non-finite value in new level");
        }
        if (std::abs(p) > opts_.blowup_bound || std::abs(q) > opts_.blowup_bound) {
          std::ostringstream os;
          os.precision(17);
          os << "|p| or |q| exceeds " << opts_.blowup_bound << " (p = " << p << ", q = " << q << ")";
          abort(AbortKind::Blowup, i, static_cast<int>(n), t_next, os.str());
        }
      }
    }
    return {std::move(next), std::move(diag)};
  }

private:
  [[noreturn]] void abort(AbortKind kind, std::size_t branch, int node, double t, const std::string& detail) const {
    throw SolverAbort(AbortRecord{kind, net_.branches[branch].id, node, t, detail});
  }

  Network net_;
  Topology topo_;
  std::vector<ModelPtr> models_;
  SolverOptions opts_;
  std::vector<StepSizes> sizes_;
};

// ---------------------------------------------------------------------------
// Runs

struct Probe {
  std::string branch;
  double x = 0.0;
};

struct ProbeRow {
  double t = 0.0;
  std::string branch;
  double x = 0.0;  ///< snapped to the nearest node
  double p = 0.0;
  double q = 0.0;
};

/// One diagnostics-log record; `node` is -1 when not tied to a grid node.
struct LogRecord {
  double t = 0.0;
  std::string event;
  std::string branch;
  int node = -1;
  std::string detail;
};

struct RunOptions {
  double horizon = 0.0;
  int stride = 1;
  std::vector<Probe> probes;
  std::function<void(const GridState&, const StepDiagnostics&)> observer;
};

struct RunResult {
  GridState final_state;
  long steps = 0;
  double end_time = 0.0;
  std::optional<AbortRecord> abort;
  std::vector<ProbeRow> rows;
  std::vector<LogRecord> log;
  double max_speed = 0.0;
  double max_junction_residual = 0.0;  ///< relative, mass_residual / (1 + sum |q|)
  bool port_pressures_identical = true;
  double min_junction_determinant = std::numeric_limits<double>::infinity();
  double max_windkessel_determinant = -std::numeric_limits<double>::infinity();
};

/// Number of whole steps of size k that fit in [0, T]; a trailing partial step is not taken.
inline long steps_for_horizon(double horizon, double k) {
  if (!(horizon > 0.0)) return 0;
  return static_cast<long>(std::floor(horizon / k + 1e-9));
}

namespace detail {

inline bool mismatched(double a, double b) {
  return std::abs(a - b) > 1e-8 * std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::string mismatch_text(const char* what, double have, double want) {
  std::ostringstream os;
  os.precision(17);
  os << what << " initial " << have << " vs prescribed " << want << " (mismatch " << std::abs(have - want) << ")";
  return os.str();
}

}  // namespace detail

/// Initial data against boundary signals at t = 0, and junction continuity of the initial data.
/// Mismatches above 1e-8 relative are reported; none of them stops a run.
inline std::vector<LogRecord> compatibility_findings(const Network& net, const Topology& topo, const GridState& s) {
  std::vector<LogRecord> out;
  auto add = [&](std::size_t branch, int node, std::string detail) {
    out.push_back({0.0, "compatibility", net.branches[branch].id, node, std::move(detail)});
  };
  for (const auto& src : net.sources) {
    const std::size_t i = net.branch_index(src.branch);
    const auto& b = s.branches[i];
    if (const auto* pbc = std::get_if<PressureBC>(&src.kind)) {
      if (detail::mismatched(b.p[0], pbc->signal.value(0.0))) {
        add(i, 0, detail::mismatch_text("source pressure:", b.p[0], pbc->signal.value(0.0)));
      }
    } else {
      const auto& sig = std::get<FlowBC>(src.kind).signal;
      if (detail::mismatched(b.q[0], sig.value(0.0))) add(i, 0, detail::mismatch_text("source flow:", b.q[0], sig.value(0.0)));
    }
  }
  for (const auto& term : net.terminals) {
    const std::size_t i = net.branch_index(term.branch);
    const auto& b = s.branches[i];
    const int n = static_cast<int>(b.p.size()) - 1;
    if (const auto* pbc = std::get_if<PressureBC>(&term.kind)) {
      if (detail::mismatched(b.p[n], pbc->signal.value(0.0))) {
        add(i, n, detail::mismatch_text("terminal pressure:", b.p[n], pbc->signal.value(0.0)));
      }
    } else if (const auto* fbc = std::get_if<FlowBC>(&term.kind)) {
      if (detail::mismatched(b.q[n], fbc->signal.value(0.0))) {
        add(i, n, detail::mismatch_text("terminal flow:", b.q[n], fbc->signal.value(0.0)));
      }
    }
  }
  for (std::size_t j = 0; j < topo.ports.size(); ++j) {
    const auto& ports = topo.ports[j];
    const auto value_at = [&](const Port& port, bool pressure) {
      const auto& b = s.branches[port.branch];
      const auto& v = pressure ? b.p : b.q;
      return port.incoming() ? v.back() : v.front();
    };
    const double p_ref = value_at(ports.front(), true);
    double in = 0.0, outflow = 0.0, scale = 0.0;
    for (const Port& port : ports) {
      const double p = value_at(port, true);
      if (detail::mismatched(p, p_ref)) {
        add(port.branch, port.incoming() ? static_cast<int>(s.branches[port.branch].p.size()) - 1 : 0,
            detail::mismatch_text(("junction " + net.junction_label(j) + " pressure:").c_str(), p, p_ref));
      }
      const double q = value_at(port, false);
      (port.incoming() ? in : outflow) += q;
      scale += std::abs(q);
    }
    if (std::abs(in - outflow) > 1e-8 * std::max(1.0, scale)) {
      std::ostringstream os;
      os.precision(17);
      os << "junction " << net.junction_label(j) << " mass balance: incoming " << in << " vs outgoing " << outflow;
      add(ports.front().branch, -1, os.str());
    }
  }
  return out;
}

/// Resolves probes to (branch index, nearest node); throws std::invalid_argument on bad probes.
inline std::vector<std::pair<std::size_t, int>> resolve_probes(const Network& net, const std::vector<Probe>& probes) {
  std::vector<std::pair<std::size_t, int>> out;
  for (const auto& pr : probes) {
    const auto idx = net.find_branch(pr.branch);
    if (!idx) throw std::invalid_argument("probe references unknown branch '" + pr.branch + "'");
    if (!(pr.x >= 0.0 && pr.x <= 1.0)) throw std::invalid_argument("probe position must lie in [0,1]");
    const int cells = net.branches[*idx].cells;
    out.emplace_back(*idx, static_cast<int>(std::lround(pr.x * cells)));
  }
  return out;
}

/// Steps from `initial` until the horizon or an abort; never throws SolverAbort.
inline RunResult run(const Solver& solver, GridState initial, const RunOptions& opts) {
  if (opts.stride < 1) throw std::invalid_argument("output stride must be >= 1");
  const Network& net = solver.network();
  const auto probes = resolve_probes(net, opts.probes);

  RunResult res;
  res.log = compatibility_findings(net, solver.topology(), initial);

  const long total = steps_for_horizon(opts.horizon, solver.dt());
  GridState state = std::move(initial);
  state.time = state.step * solver.dt();
  for (long m = 0; m < total; ++m) {
    std::pair<GridState, StepDiagnostics> out;
    try {
      out = solver.step(state);
    } catch (const SolverAbort& err) {
      const AbortRecord& r = err.record();
      res.abort = r;
      res.log.push_back({r.time, to_string(r.kind), r.branch, r.node, r.detail});
      break;
    }
    state = std::move(out.first);
    const StepDiagnostics& diag = out.second;
    res.max_speed = std::max(res.max_speed, diag.speed_bound);
    for (const auto& jd : diag.junctions) {
      res.max_junction_residual = std::max(res.max_junction_residual, jd.relative_residual);
      res.port_pressures_identical = res.port_pressures_identical && jd.pressures_identical;
      res.min_junction_determinant = std::min(res.min_junction_determinant, jd.determinant);
    }
    for (double det : diag.windkessel_determinants) {
      res.max_windkessel_determinant = std::max(res.max_windkessel_determinant, det);
    }
    if (opts.observer) opts.observer(state, diag);
    if (state.step % opts.stride == 0) {
      for (const auto& [b, n] : probes) {
        const int cells = net.branches[b].cells;
        res.rows.push_back({state.time, net.branches[b].id, static_cast<double>(n) / cells,
                            state.branches[b].p[n], state.branches[b].q[n]});
      }
    }
  }
  res.steps = state.step;
  res.end_time = state.time;
  res.final_state = std::move(state);
  return res;
}

}  // namespace vesselnet
