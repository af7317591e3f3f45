#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vesselnet/models.hpp"
#include "vesselnet/signal.hpp"

namespace vesselnet {

enum class End { X0, X1 };

inline const char* to_string(End e) { return e == End::X0 ? "x0" : "x1"; }

/// One vessel on x in [0,1], discretized with `cells` intervals (cells + 1 nodes).
struct Branch {
  std::string id;
  int cells = 2;
  ModelSpec model = LinearParams{};
  bool operator==(const Branch&) const = default;
};

/// Incoming branches attach at x = 1, outgoing branches at x = 0.
struct Junction {
  std::string id;
  std::vector<std::string> incoming;
  std::vector<std::string> outgoing;
  bool operator==(const Junction&) const = default;
};

struct PressureBC {
  Signal signal;
  bool operator==(const PressureBC&) const = default;
};
struct FlowBC {
  Signal signal;
  bool operator==(const FlowBC&) const = default;
};
/// dP/dt - eta dQ/dt + delta P - epsilon Q = w(t) at x = 1.
struct WindkesselBC {
  double eta = 1.0;
  double delta = 1.0;
  double epsilon = 1.0;
  Signal w;
  bool operator==(const WindkesselBC&) const = default;
};

using SourceKind = std::variant<PressureBC, FlowBC>;
using TerminalKind = std::variant<PressureBC, FlowBC, WindkesselBC>;

struct SourceSpec {
  std::string branch;
  SourceKind kind;
  bool operator==(const SourceSpec&) const = default;
};

struct TerminalSpec {
  std::string branch;
  TerminalKind kind;
  bool operator==(const TerminalSpec&) const = default;
};

struct Network {
  std::vector<Branch> branches;
  std::vector<Junction> junctions;
  std::vector<SourceSpec> sources;
  std::vector<TerminalSpec> terminals;

  std::optional<std::size_t> find_branch(const std::string& id) const {
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (branches[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::size_t branch_index(const std::string& id) const {
    if (auto i = find_branch(id)) return *i;
    throw std::out_of_range("unknown branch id '" + id + "'");
  }

  std::string junction_label(std::size_t j) const {
    return junctions[j].id.empty() ? "junction#" + std::to_string(j) : junctions[j].id;
  }

  bool operator==(const Network&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Finding {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> violations;
  std::vector<Finding> warnings;

  bool ok() const noexcept { return violations.empty(); }
  bool has_violation(const std::string& code) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Finding& f) { return f.code == code; });
  }
  bool has_warning(const std::string& code) const {
    return std::any_of(warnings.begin(), warnings.end(), [&](const Finding& f) { return f.code == code; });
  }
};

namespace detail {

inline void check_signal(const Signal& s, const std::string& where, ValidationReport& report) {
  if (auto d = s.defect(); !d.empty()) report.violations.push_back({"bad signal", where + ": " + d});
  if (!s.continuously_differentiable()) {
    report.warnings.push_back({"non-differentiable signal", where + ": table signal is only piecewise linear"});
  }
}

}  // namespace detail

inline ValidationReport validate_topology(const Network& net) {
  ValidationReport report;
  const std::size_t nb = net.branches.size();
  if (nb == 0) report.violations.push_back({"empty network", "network has no branches"});

  std::map<std::string, int> seen;
  for (const auto& b : net.branches) {
    if (++seen[b.id] == 2) report.violations.push_back({"duplicate id", "branch id '" + b.id + "' declared twice"});
    if (b.cells < 2) {
      report.violations.push_back({"too few cells", "branch '" + b.id + "' has " + std::to_string(b.cells) +
                                                        " cells (need >= 2)"});
    }
  }

  // roles[branch][end] collects a description of every assignment.
  std::vector<std::array<std::vector<std::string>, 2>> roles(nb);
  auto assign = [&](const std::string& id, End end, const std::string& role) -> std::optional<std::size_t> {
    auto idx = net.find_branch(id);
    if (!idx) {
      report.violations.push_back({"unknown id", role + " references unknown branch '" + id + "'"});
      return std::nullopt;
    }
    roles[*idx][end == End::X0 ? 0 : 1].push_back(role);
    return idx;
  };

  for (const auto& s : net.sources) {
    assign(s.branch, End::X0, "source");
    std::visit([&](const auto& k) { detail::check_signal(k.signal, "source on '" + s.branch + "'", report); },
               s.kind);
  }
  for (const auto& t : net.terminals) {
    assign(t.branch, End::X1, "terminal");
    const std::string where = "terminal on '" + t.branch + "'";
    if (const auto* wk = std::get_if<WindkesselBC>(&t.kind)) {
      if (!(wk->eta > 0.0 && wk->delta > 0.0 && wk->epsilon > 0.0)) {
        report.violations.push_back({"windkessel parameters", where + ": eta, delta, epsilon must be positive"});
      }
      detail::check_signal(wk->w, where, report);
    } else {
      std::visit(
          [&](const auto& k) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(k)>, WindkesselBC>) {
              detail::check_signal(k.signal, where, report);
            }
          },
          t.kind);
    }
  }

  // Union-find over branches for connectivity.
  std::vector<std::size_t> parent(nb);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  for (std::size_t j = 0; j < net.junctions.size(); ++j) {
    const auto& junc = net.junctions[j];
    const std::string label = net.junction_label(j);
    if (junc.incoming.empty()) {
      report.violations.push_back({"junction without incoming", label + " has no incoming branch"});
    }
    if (junc.outgoing.empty()) {
      report.violations.push_back({"junction without outgoing", label + " has no outgoing branch"});
    }
    std::optional<std::size_t> first;
    auto link = [&](std::optional<std::size_t> idx) {
      if (!idx) return;
      if (!first) {
        first = idx;
      } else {
        parent[find(*idx)] = find(*first);
      }
    };
    for (const auto& id : junc.incoming) link(assign(id, End::X1, label + " (incoming)"));
    for (const auto& id : junc.outgoing) link(assign(id, End::X0, label + " (outgoing)"));
    for (const auto& id : junc.incoming) {
      if (std::find(junc.outgoing.begin(), junc.outgoing.end(), id) != junc.outgoing.end()) {
        report.warnings.push_back({"self-loop", "branch '" + id + "' attaches to " + label + " by both ends"});
      }
    }
  }

  for (std::size_t i = 0; i < nb; ++i) {
    for (int e = 0; e < 2; ++e) {
      const std::string where = "branch '" + net.branches[i].id + "' end " + (e == 0 ? "x0" : "x1");
      if (roles[i][e].empty()) {
        report.violations.push_back({"unassigned end", where + " has no boundary or junction role"});
      } else if (roles[i][e].size() > 1) {
        std::string list;
        for (const auto& r : roles[i][e]) list += (list.empty() ? "" : ", ") + r;
        report.violations.push_back({"end doubly assigned", where + " is assigned to: " + list});
      }
    }
  }

  if (nb > 1) {
    const std::size_t root = find(0);
    for (std::size_t i = 1; i < nb; ++i) {
      if (find(i) != root) {
        report.violations.push_back(
            {"disconnected", "branch '" + net.branches[i].id + "' is not connected to '" + net.branches[0].id + "'"});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Windkessel circuit: resistance r1 in series with (r2 parallel cap), venous pressure pv.

/// Rewrites  C d(P - Pv)/dt - R1 C dQ/dt + (P - Pv)/R2 - (1 + R1/R2) Q = 0
/// as  dP/dt - eta dQ/dt + delta P - epsilon Q = w(t).
inline WindkesselBC windkessel_from_circuit(double r1, double r2, double cap, const Signal& pv) {
  if (!(r1 > 0.0 && r2 > 0.0 && cap > 0.0)) {
    throw std::invalid_argument("windkessel circuit needs positive r1, r2 and capacitance");
  }
  if (pv.is_table()) throw std::invalid_argument("venous pressure must be differentiable (table signals rejected)");
  if (auto d = pv.defect(); !d.empty()) throw std::invalid_argument("venous pressure: " + d);

  WindkesselBC wk;
  wk.eta = r1;
  wk.delta = 1.0 / (r2 * cap);
  wk.epsilon = (1.0 + r1 / r2) / cap;
  const double delta = wk.delta;

  const auto& v = pv.variant();
  if (const auto* c = std::get_if<ConstantSignal>(&v)) {
    wk.w = Signal::constant(c->value * delta);
  } else if (const auto* s = std::get_if<SinusoidSignal>(&v)) {
    // A sin(wt+phi) + delta A sin(wt+phi) + A w cos(wt+phi) = A sqrt(delta^2 + w^2) sin(wt + phi + atan2(w, delta))
    const double w = 2.0 * std::numbers::pi / s->period;
    wk.w = Signal::sinusoid(s->mean * delta, s->amplitude * std::hypot(delta, w), s->period,
                            s->phase + std::atan2(w, delta));
  } else {
    const Signal copy = pv;
    wk.w = Signal::function(
        "windkessel(" + std::get<FunctionSignal>(v).label + ")",
        [copy, delta](double t) { return copy.derivative(t) + delta * copy.value(t); },
        [copy, delta](double t) {
          // Second derivative of the venous signal is not available; use a centered difference.
          const double step = 1e-6;
          return (copy.derivative(t + step) - copy.derivative(t - step)) / (2.0 * step) + delta * copy.derivative(t);
        });
  }
  return wk;
}

// ---------------------------------------------------------------------------
// Resolved topology: per-branch end roles and per-junction port lists

enum class RoleKind { None, Source, Terminal, Port };

struct EndRole {
  RoleKind kind = RoleKind::None;
  std::size_t index = 0;  ///< into sources, terminals or junctions
};

struct Port {
  std::size_t branch = 0;
  End end = End::X1;
  bool incoming() const noexcept { return end == End::X1; }
};

struct Topology {
  std::vector<std::array<EndRole, 2>> ends;  ///< [branch][0 = x0, 1 = x1]
  std::vector<std::vector<Port>> ports;      ///< per junction: incoming ports first, then outgoing
};

/// Requires a network that passes validate_topology.
inline Topology resolve_topology(const Network& net) {
  if (auto report = validate_topology(net); !report.ok()) {
    throw std::invalid_argument("network is not valid: " + report.violations.front().message);
  }
  Topology topo;
  topo.ends.resize(net.branches.size());
  for (std::size_t i = 0; i < net.sources.size(); ++i) {
    topo.ends[net.branch_index(net.sources[i].branch)][0] = {RoleKind::Source, i};
  }
  for (std::size_t i = 0; i < net.terminals.size(); ++i) {
    topo.ends[net.branch_index(net.terminals[i].branch)][1] = {RoleKind::Terminal, i};
  }
  topo.ports.resize(net.junctions.size());
  for (std::size_t j = 0; j < net.junctions.size(); ++j) {
    for (const auto& id : net.junctions[j].incoming) {
      const std::size_t b = net.branch_index(id);
      topo.ends[b][1] = {RoleKind::Port, j};
      topo.ports[j].push_back({b, End::X1});
    }
    for (const auto& id : net.junctions[j].outgoing) {
      const std::size_t b = net.branch_index(id);
      topo.ends[b][0] = {RoleKind::Port, j};
      topo.ports[j].push_back({b, End::X0});
    }
  }
  return topo;
}

}  // namespace vesselnet
