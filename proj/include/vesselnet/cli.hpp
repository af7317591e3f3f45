#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vesselnet/config.hpp"
#include "vesselnet/output.hpp"
#include "vesselnet/scheme.hpp"
#include "vesselnet/verify.hpp"

namespace vesselnet {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitAbort = 2, kExitUsage = 64 };

/// Command-line options shared by all subcommands; unset values fall back to the document.
struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<double> sigma;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> stride;
  std::vector<int> levels;
  std::vector<std::string> probes;  ///< "BRANCH:X"
};

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// "40,80,160" -> {40, 80, 160}
inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad level '" + item + "'");
    }
    if (used != item.size()) throw UsageError("bad level '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline ProbeSpec parse_probe(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw UsageError("probe must look like BRANCH:X, got '" + text + "'");
  ProbeSpec p;
  p.branch = text.substr(0, colon);
  const std::string xs = text.substr(colon + 1);
  std::size_t used = 0;
  try {
    p.x = std::stod(xs, &used);
  } catch (const std::exception&) {
    throw UsageError("bad probe position '" + xs + "'");
  }
  if (used != xs.size()) throw UsageError("bad probe position '" + xs + "'");
  if (!(p.x >= 0.0 && p.x <= 1.0)) throw UsageError("probe position must lie in [0,1], got '" + xs + "'");
  return p;
}

/// Loads the document and applies command-line overrides.
inline Config load_config(const CliOptions& opts) {
  if (opts.config_path.empty()) throw UsageError("--config is required");
  std::string text;
  try {
    text = read_file(opts.config_path);
  } catch (const std::runtime_error& err) {
    throw ConfigError(err.what());
  }
  Config cfg = parse_config(text);
  if (opts.sigma && opts.dt) throw UsageError("give either --sigma or --dt, not both");
  if (opts.sigma) {
    cfg.run.sigma = opts.sigma;
    cfg.run.dt.reset();
  }
  if (opts.dt) {
    cfg.run.dt = opts.dt;
    cfg.run.sigma.reset();
  }
  if (opts.horizon) {
    cfg.run.horizon = *opts.horizon;
    cfg.study.horizon = *opts.horizon;
  }
  if (opts.stride) cfg.run.stride = *opts.stride;
  for (const auto& p : opts.probes) {
    const ProbeSpec spec = parse_probe(p);
    if (!cfg.network.find_branch(spec.branch)) throw ConfigError("probe references unknown branch '" + spec.branch + "'");
    cfg.run.probes.push_back(spec);
  }
  if (!opts.levels.empty()) cfg.study.levels = opts.levels;
  if (cfg.run.stride < 1) throw UsageError("stride must be >= 1");
  if (cfg.run.horizon < 0.0) throw UsageError("horizon must be >= 0");
  if (cfg.run.sigma && !(*cfg.run.sigma > 0.0)) throw UsageError("sigma must be positive");
  if (cfg.run.dt && !(*cfg.run.dt > 0.0)) throw UsageError("dt must be positive");
  return cfg;
}

/// k from dt, or from sigma applied to the finest branch.
inline std::optional<double> resolve_dt(const Config& cfg) {
  if (cfg.run.dt) return cfg.run.dt;
  if (!cfg.run.sigma) return std::nullopt;
  int finest = 0;
  for (const auto& b : cfg.network.branches) finest = std::max(finest, b.cells);
  if (finest == 0) return std::nullopt;
  return *cfg.run.sigma / finest;
}

// ---------------------------------------------------------------------------
// check

struct CheckReport {
  std::vector<Finding> violations;
  std::vector<Finding> warnings;
  bool ok() const noexcept { return violations.empty(); }
  bool has_violation(const std::string& code) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Finding& f) { return f.code == code; });
  }
};

/// Topology, then hyperbolicity and boundary signs on the initial data, CFL when a step
/// size is known, and initial/boundary compatibility (warnings only).
inline CheckReport check_config(const Config& cfg, std::optional<double> dt) {
  CheckReport rep;
  const Network& net = cfg.network;
  const ValidationReport topo_report = validate_topology(net);
  rep.violations = topo_report.violations;
  rep.warnings = topo_report.warnings;
  if (!topo_report.ok()) return rep;

  std::vector<ModelPtr> models;
  try {
    models = Solver::default_models(net);
  } catch (const std::invalid_argument& err) {
    rep.violations.push_back({"model", err.what()});
    return rep;
  }
  const Topology topo = resolve_topology(net);

  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };

  GridState state;
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    const auto& b = net.branches[i];
    BranchState bs;
    double bound = 0.0;
    std::vector<std::optional<EigenData>> eig(b.cells + 1);
    for (int n = 0; n <= b.cells; ++n) {
      const double x = static_cast<double>(n) / b.cells;
      const double p = initial_value(cfg.initial.pressure[i], x);
      const double q = initial_value(cfg.initial.flow[i], x);
      bs.p.push_back(p);
      bs.q.push_back(q);
      const std::string where = "branch '" + b.id + "' node " + std::to_string(n) + " (x = " + fmt(x) + ")";
      try {
        const Coefficients co = models[i]->eval(x, 0.0, p, q);
        eig[n] = eigen(co);
        bound = std::max(bound, speed_bound(*eig[n]));
      } catch (const DomainError& err) {
        rep.violations.push_back({"domain", where + ": " + err.what()});
      } catch (const HyperbolicityLoss& err) {
        rep.violations.push_back({"hyperbolicity", where + ": " + err.what() + " (need c^2 + ab > 0)"});
      }
    }
    for (int e = 0; e < 2; ++e) {
      const int n = e == 0 ? 0 : b.cells;
      if (!eig[n]) continue;
      const BoundarySignCheck chk = check_boundary_sign(*eig[n]);
      if (!chk.ok) {
        rep.violations.push_back({"boundary sign", "branch '" + b.id + "' end " + (e == 0 ? "x0" : "x1") +
                                                      ": boundary sign condition violated, lambda_l = " +
                                                      fmt(chk.lambda_l) + ", lambda_r = " + fmt(chk.lambda_r) +
                                                      " (need lambda_l < 0 < lambda_r, i.e. a*b > 0)"});
      }
    }
    if (dt) {
      const double sigma = *dt * b.cells;
      const CflCheck cfl = cfl_check(sigma, bound);
      if (!cfl.ok) {
        rep.violations.push_back({"cfl", "branch '" + b.id + "': sigma * speed bound = " + fmt(sigma) + " * " +
                                             fmt(bound) + " = " + fmt(cfl.courant) + " is not < 1"});
      }
    }
    state.branches.push_back(std::move(bs));
  }
  if (!dt) rep.warnings.push_back({"cfl", "no step size given; CFL not checked"});
  for (const auto& rec : compatibility_findings(net, topo, state)) {
    rep.warnings.push_back({"compatibility", "branch '" + rec.branch + "': " + rec.detail});
  }
  return rep;
}

inline std::string check_text(const CheckReport& rep) {
  std::ostringstream os;
  for (const auto& v : rep.violations) os << "violation [" << v.code << "] " << v.message << "\n";
  for (const auto& w : rep.warnings) os << "warning [" << w.code << "] " << w.message << "\n";
  os << rep.violations.size() << " violations, " << rep.warnings.size() << " warnings\n";
  return os.str();
}

namespace cli_detail {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const VerificationError& e) {
    err << "verification error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SolverAbort& e) {
    err << "solver abort: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  }
}

inline std::filesystem::path out_path(const CliOptions& opts, const std::string& name) {
  return std::filesystem::path(opts.out_dir.empty() ? "." : opts.out_dir) / name;
}

}  // namespace cli_detail

inline int cmd_check(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return cli_detail::guarded(err, [&] {
    const Config cfg = load_config(opts);
    const CheckReport rep = check_config(cfg, resolve_dt(cfg));
    out << check_text(rep);
    return rep.ok() ? kExitOk : kExitValidation;
  });
}

// ---------------------------------------------------------------------------
// run

inline int cmd_run(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return cli_detail::guarded(err, [&] {
    const Config cfg = load_config(opts);
    const auto dt = resolve_dt(cfg);
    if (!dt) throw UsageError("a step size is required: give --sigma or --dt (or run.sigma / run.dt)");
    const CheckReport rep = check_config(cfg, dt);
    if (!rep.ok()) {
      out << check_text(rep);
      return kExitValidation;
    }
    SolverOptions so;
    so.dt = *dt;
    so.blowup_bound = cfg.run.blowup_bound;
    so.closure = cfg.run.explicit_windkessel ? WindkesselClosure::Explicit : WindkesselClosure::Trapezoidal;
    const Solver solver(cfg.network, Solver::default_models(cfg.network), so);
    RunOptions ro;
    ro.horizon = cfg.run.horizon;
    ro.stride = cfg.run.stride;
    for (const auto& p : cfg.run.probes) ro.probes.push_back({p.branch, p.x});

    const auto start = std::chrono::steady_clock::now();
    RunResult res = run(solver, solver.make_state(cfg.initial.pressure, cfg.initial.flow), ro);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_atomic(cli_detail::out_path(opts, "probes.csv"), probe_csv(res.rows));
    write_atomic(cli_detail::out_path(opts, "diagnostics.jsonl"), diagnostics_jsonl(res.log));
    write_atomic(cli_detail::out_path(opts, "summary.json"), summary_json(res, wall).dump(2) + "\n");

    out << "steps " << res.steps << ", final time " << format_number(res.end_time) << ", max speed "
        << format_number(res.max_speed) << ", junction residual " << format_number(res.max_junction_residual)
        << "\n";
    if (res.abort) {
      err << "solver abort: " << SolverAbort(*res.abort).what() << "\n";
      return kExitAbort;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// studies

namespace cli_detail {

inline std::string reference_kind(const Config& cfg) {
  if (!cfg.study.reference.empty()) return cfg.study.reference;
  return cfg.study.manufactured.empty() ? "oracle" : "manufactured";
}

inline std::vector<int> study_levels(const Config& cfg) {
  if (cfg.study.levels.empty()) throw UsageError("no levels: give --levels or study.levels");
  try {
    check_levels(cfg.study.levels);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg.study.levels;
}

/// The study problem and its exact reference (empty for self-referenced studies).
inline std::pair<StudyProblem, Reference> study_problem(const Config& cfg, const CliOptions& opts) {
  const std::string kind = reference_kind(cfg);
  std::pair<StudyProblem, Reference> out;
  if (kind == "manufactured") {
    out = manufactured_problem(cfg);
  } else {
    out.first = plain_problem(cfg);
    if (kind == "oracle") {
      const auto oracle = std::make_shared<OracleSolution>(
          characteristics_oracle(oracle_problem_from(cfg.network, cfg.initial, cfg.study.horizon)));
      out.second = [oracle](std::size_t, double x, double t) { return (*oracle)(x, t); };
      out.first.label = "oracle";
    } else {
      out.first.label = "self-referenced";
    }
  }
  if (opts.sigma) out.first.sigma = *opts.sigma;
  return out;
}

}  // namespace cli_detail

inline int cmd_converge(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return cli_detail::guarded(err, [&] {
    const Config cfg = load_config(opts);
    const auto levels = cli_detail::study_levels(cfg);
    const auto [prob, ref] = cli_detail::study_problem(cfg, opts);
    const ConvergenceReport rep = ref ? convergence_study(prob, levels, ref)
                                      : self_convergence_study(prob, levels, prob, 4 * levels.back());
    out << convergence_table(rep);
    if (!opts.out_dir.empty()) {
      write_atomic(cli_detail::out_path(opts, "convergence.json"), convergence_json(rep).dump(2) + "\n");
    }
    if (rep.abort) return kExitAbort;
    return rep.passed ? kExitOk : kExitValidation;
  });
}

inline int cmd_stability(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return cli_detail::guarded(err, [&] {
    const Config cfg = load_config(opts);
    StudyProblem prob = plain_problem(cfg);
    if (opts.sigma) prob.sigma = *opts.sigma;
    prob.label = "stability";
    int cells = 0;
    for (const auto& b : cfg.network.branches) cells = std::max(cells, b.cells);
    const StabilityReport rep = stability_probe(prob, cells, cfg.study.eps, cfg.study.bump);
    out << stability_table(rep);
    if (!opts.out_dir.empty()) {
      write_atomic(cli_detail::out_path(opts, "stability.json"), stability_json(rep).dump(2) + "\n");
    }
    if (rep.abort) return kExitAbort;
    return rep.passed ? kExitOk : kExitValidation;
  });
}

/// Exploratory: always exits 0 once both reports exist.
inline int cmd_compare_windkessel(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return cli_detail::guarded(err, [&] {
    const Config cfg = load_config(opts);
    const auto levels = cli_detail::study_levels(cfg);
    StudyProblem prob = cli_detail::study_problem(cfg, opts).first;
    const WindkesselComparison cmp = windkessel_variant_comparison(prob, levels);
    out << "reference: trapezoidal closure at N = " << cmp.reference_cells << "\n";
    out << convergence_table(cmp.trapezoidal) << convergence_table(cmp.explicit_closure);
    if (!opts.out_dir.empty()) {
      Json j;
      j["reference_N"] = cmp.reference_cells;
      j["trapezoidal"] = convergence_json(cmp.trapezoidal);
      j["explicit"] = convergence_json(cmp.explicit_closure);
      write_atomic(cli_detail::out_path(opts, "windkessel_comparison.json"), j.dump(2) + "\n");
    }
    return kExitOk;
  });
}

}  // namespace vesselnet
