#pragma once

#include <algorithm>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vesselnet/errors.hpp"
#include "vesselnet/network.hpp"

namespace vesselnet {

using Json = nlohmann::ordered_json;

namespace config_detail {

/// Line and column (1-based) of a byte offset in `text`.
inline std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, std::string("missing required field '") + key + "'");
  return *it;
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

inline double number_at(const Json& obj, const char* key, const std::string& path) {
  return number(require(obj, key, path), path + "/" + key);
}

inline double number_or(const Json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number(obj.at(key), path + "/" + key);
}

inline std::string string_at(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) fail(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

inline const Json& array_at(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_array()) fail(path + "/" + key, "expected a list");
  return v;
}

inline std::vector<double> numbers(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "/" + std::to_string(i)));
  return out;
}

}  // namespace config_detail

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    const auto [line, col] = config_detail::line_column(text, err.byte > 0 ? err.byte - 1 : 0);
    std::string msg = err.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(msg, line, col);
  }
}

// ---------------------------------------------------------------------------
// Signals

inline Signal signal_from_json(const Json& v, const std::string& path) {
  using namespace config_detail;
  if (v.is_number()) return Signal::constant(v.get<double>());
  const std::string kind = string_at(v, "kind", path);
  if (kind == "constant") return Signal::constant(number_at(v, "value", path));
  if (kind == "sinusoid") {
    return Signal::sinusoid(number_or(v, "mean", 0.0, path), number_at(v, "amplitude", path),
                            number_at(v, "period", path), number_or(v, "phase", 0.0, path));
  }
  if (kind == "table") {
    const Json& pts = array_at(v, "points", path);
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string p = path + "/points/" + std::to_string(i);
      if (!pts[i].is_array() || pts[i].size() != 2) fail(p, "expected a [t, value] pair");
      out.emplace_back(number(pts[i][0], p + "/0"), number(pts[i][1], p + "/1"));
    }
    return Signal::table(std::move(out));
  }
  fail(path + "/kind", "unknown signal kind '" + kind + "'");
}

inline Json signal_to_json(const Signal& s) {
  return std::visit(
      [](const auto& v) -> Json {
        using S = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<S, ConstantSignal>) {
          return {{"kind", "constant"}, {"value", v.value}};
        } else if constexpr (std::is_same_v<S, SinusoidSignal>) {
          return {{"kind", "sinusoid"}, {"mean", v.mean}, {"amplitude", v.amplitude}, {"period", v.period},
                  {"phase", v.phase}};
        } else if constexpr (std::is_same_v<S, TableSignal>) {
          Json pts = Json::array();
          for (const auto& [t, val] : v.points) pts.push_back({t, val});
          return {{"kind", "table"}, {"points", pts}};
        } else {
          throw std::invalid_argument("signal '" + v.label + "' is computed and has no document form");
        }
      },
      s.variant());
}

// ---------------------------------------------------------------------------
// Closed-form fields

inline Factor factor_from_json(const Json& v, const std::string& path) {
  using namespace config_detail;
  const std::string kind = string_at(v, "kind", path);
  if (kind == "one") return UnitFactor{};
  if (kind == "sin") return SinFactor{number_or(v, "omega", 1.0, path), number_or(v, "phase", 0.0, path)};
  if (kind == "cos") return CosFactor{number_or(v, "omega", 1.0, path), number_or(v, "phase", 0.0, path)};
  if (kind == "poly") return PolyFactor{numbers(require(v, "coeffs", path), path + "/coeffs")};
  fail(path + "/kind", "unknown factor kind '" + kind + "'");
}

inline Json factor_to_json(const Factor& f) {
  return std::visit(
      [](const auto& g) -> Json {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, UnitFactor>) {
          return {{"kind", "one"}};
        } else if constexpr (std::is_same_v<G, SinFactor>) {
          return {{"kind", "sin"}, {"omega", g.omega}, {"phase", g.phase}};
        } else if constexpr (std::is_same_v<G, CosFactor>) {
          return {{"kind", "cos"}, {"omega", g.omega}, {"phase", g.phase}};
        } else {
          return {{"kind", "poly"}, {"coeffs", g.coeffs}};
        }
      },
      f);
}

/// A number is a constant field; otherwise {offset, terms: [{amp, x: factor, t: factor}]}.
inline Field field_from_json(const Json& v, const std::string& path) {
  using namespace config_detail;
  if (v.is_number()) return Field::constant(v.get<double>());
  if (!v.is_object()) fail(path, "expected a number or a field object");
  Field f;
  f.offset = number_or(v, "offset", 0.0, path);
  if (v.contains("terms")) {
    const Json& terms = array_at(v, "terms", path);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string p = path + "/terms/" + std::to_string(i);
      FieldTerm term;
      term.amplitude = number_or(terms[i], "amp", 1.0, p);
      term.x = terms[i].contains("x") ? factor_from_json(terms[i]["x"], p + "/x") : Factor{UnitFactor{}};
      term.t = terms[i].contains("t") ? factor_from_json(terms[i]["t"], p + "/t") : Factor{UnitFactor{}};
      f.terms.push_back(std::move(term));
    }
  }
  return f;
}

inline Json field_to_json(const Field& f) {
  if (f.terms.empty()) return f.offset;
  Json terms = Json::array();
  for (const auto& t : f.terms) {
    terms.push_back({{"amp", t.amplitude}, {"x", factor_to_json(t.x)}, {"t", factor_to_json(t.t)}});
  }
  return {{"offset", f.offset}, {"terms", terms}};
}

/// A field, or {"table": {"x": [...], "values": [...]}} sampled over x.
inline InitialProfile profile_from_json(const Json& v, const std::string& path) {
  using namespace config_detail;
  if (v.is_object() && v.contains("table")) {
    const Json& t = v["table"];
    ProfileTable table{numbers(require(t, "x", path + "/table"), path + "/table/x"),
                       numbers(require(t, "values", path + "/table"), path + "/table/values")};
    if (table.xs.empty() || table.xs.size() != table.values.size()) {
      fail(path + "/table", "x and values must be nonempty and of equal length");
    }
    for (std::size_t i = 1; i < table.xs.size(); ++i) {
      if (!(table.xs[i] > table.xs[i - 1])) fail(path + "/table/x", "positions must be strictly increasing");
    }
    return table;
  }
  return field_from_json(v, path);
}

// ---------------------------------------------------------------------------
// Models

inline ModelSpec model_from_json(const Json& v, const std::string& path) {
  using namespace config_detail;
  const std::string name = string_at(v, "name", path);
  if (name == "linear") {
    LinearParams p;
    p.a = number_at(v, "a", path);
    p.b = number_at(v, "b", path);
    p.c = number_or(v, "c", 0.0, path);
    p.f = number_or(v, "f", 0.0, path);
    p.g = number_or(v, "g", 0.0, path);
    if (!(p.a > 0.0)) fail(path + "/a", "linear model requires a > 0");
    return p;
  }
  if (name == "blood_flow") {
    BloodFlowParams p;
    p.rho = number_at(v, "rho", path);
    p.mu = number_or(v, "mu", 0.0, path);
    p.beta = number_at(v, "beta", path);
    p.p0 = number_at(v, "p0", path);
    p.p_min = number_or(v, "p_min", 0.0, path);
    const std::string ap = path + "/a0";
    const Json& a0 = require(v, "a0", path);
    if (a0.is_number()) {
      p.a0 = ConstantArea{a0.get<double>()};
    } else {
      const std::string kind = string_at(a0, "kind", ap);
      if (kind == "constant") {
        p.a0 = ConstantArea{number_at(a0, "value", ap)};
      } else if (kind == "linear") {
        p.a0 = LinearTaper{number_at(a0, "alpha", ap), number_at(a0, "gamma", ap)};
      } else if (kind == "table") {
        p.a0 = SplineArea{numbers(require(a0, "x", ap), ap + "/x"), numbers(require(a0, "areas", ap), ap + "/areas")};
      } else {
        fail(ap + "/kind", "unknown area profile kind '" + kind + "'");
      }
    }
    try {
      (void)BloodFlowModel(p);
    } catch (const std::invalid_argument& err) {
      fail(path, err.what());
    }
    return p;
  }
  fail(path + "/name", "unknown model '" + name + "'");
}

inline Json model_to_json(const ModelSpec& spec) {
  if (const auto* lin = std::get_if<LinearParams>(&spec)) {
    return {{"name", "linear"}, {"a", lin->a}, {"b", lin->b}, {"c", lin->c}, {"f", lin->f}, {"g", lin->g}};
  }
  const auto& bf = std::get<BloodFlowParams>(spec);
  Json a0;
  if (const auto* c = std::get_if<ConstantArea>(&bf.a0)) {
    a0 = {{"kind", "constant"}, {"value", c->value}};
  } else if (const auto* l = std::get_if<LinearTaper>(&bf.a0)) {
    a0 = {{"kind", "linear"}, {"alpha", l->alpha}, {"gamma", l->gamma}};
  } else {
    const auto& s = std::get<SplineArea>(bf.a0);
    a0 = {{"kind", "table"}, {"x", s.xs}, {"areas", s.areas}};
  }
  Json out = {{"name", "blood_flow"}, {"rho", bf.rho}, {"mu", bf.mu}, {"beta", bf.beta}, {"p0", bf.p0}};
  if (bf.p_min != 0.0) out["p_min"] = bf.p_min;
  out["a0"] = a0;
  return out;
}

// ---------------------------------------------------------------------------
// Network

inline Network network_from_json(const Json& doc) {
  using namespace config_detail;
  if (!doc.is_object()) fail("", "top level must be an object");
  Network net;

  const Json& branches = array_at(doc, "branches", "");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "/branches/" + std::to_string(i);
    Branch b;
    b.id = string_at(branches[i], "id", p);
    b.cells = integer(require(branches[i], "cells", p), p + "/cells");
    b.model = model_from_json(require(branches[i], "model", p), p + "/model");
    if (!ids.insert(b.id).second) fail(p + "/id", "duplicate branch id '" + b.id + "'");
    net.branches.push_back(std::move(b));
  }
  auto known = [&](const std::string& id, const std::string& p) {
    if (!ids.count(id)) fail(p, "unknown branch id '" + id + "'");
    return id;
  };

  if (doc.contains("junctions")) {
    const Json& juncs = array_at(doc, "junctions", "");
    for (std::size_t j = 0; j < juncs.size(); ++j) {
      const std::string p = "/junctions/" + std::to_string(j);
      Junction junc;
      if (juncs[j].is_object() && juncs[j].contains("id")) junc.id = string_at(juncs[j], "id", p);
      for (const char* side : {"incoming", "outgoing"}) {
        const Json& list = array_at(juncs[j], side, p);
        for (std::size_t k = 0; k < list.size(); ++k) {
          const std::string lp = p + "/" + side + "/" + std::to_string(k);
          if (!list[k].is_string()) fail(lp, "expected a branch id");
          (std::string(side) == "incoming" ? junc.incoming : junc.outgoing).push_back(known(list[k], lp));
        }
      }
      net.junctions.push_back(std::move(junc));
    }
  }

  if (doc.contains("boundaries")) {
    const Json& bcs = array_at(doc, "boundaries", "");
    for (std::size_t i = 0; i < bcs.size(); ++i) {
      const std::string p = "/boundaries/" + std::to_string(i);
      const Json& bc = bcs[i];
      const std::string branch = known(string_at(bc, "branch", p), p + "/branch");
      const std::string end = string_at(bc, "end", p);
      const std::string kind = string_at(bc, "kind", p);
      if (end != "x0" && end != "x1") fail(p + "/end", "end must be \"x0\" or \"x1\"");
      if (kind == "windkessel") {
        if (end != "x1") fail(p + "/end", "windkessel boundaries attach at x1");
        WindkesselBC wk;
        if (bc.contains("circuit")) {
          const Json& c = bc["circuit"];
          const std::string cp = p + "/circuit";
          const Signal pv = c.contains("pv") ? signal_from_json(c["pv"], cp + "/pv") : Signal::constant(0.0);
          try {
            wk = windkessel_from_circuit(number_at(c, "r1", cp), number_at(c, "r2", cp), number_at(c, "cap", cp), pv);
          } catch (const std::invalid_argument& err) {
            fail(cp, err.what());
          }
        } else {
          const Json& prm = require(bc, "params", p);
          const std::string pp = p + "/params";
          wk.eta = number_at(prm, "eta", pp);
          wk.delta = number_at(prm, "delta", pp);
          wk.epsilon = number_at(prm, "epsilon", pp);
          wk.w = signal_from_json(require(prm, "w", pp), pp + "/w");
        }
        net.terminals.push_back({branch, wk});
        continue;
      }
      if (kind != "pressure" && kind != "flow") fail(p + "/kind", "unknown boundary kind '" + kind + "'");
      const Signal sig = signal_from_json(require(bc, "signal", p), p + "/signal");
      if (end == "x0") {
        net.sources.push_back(
            {branch, kind == "pressure" ? SourceKind{PressureBC{sig}} : SourceKind{FlowBC{sig}}});
      } else {
        net.terminals.push_back(
            {branch, kind == "pressure" ? TerminalKind{PressureBC{sig}} : TerminalKind{FlowBC{sig}}});
      }
    }
  }
  return net;
}

/// Parses the network part of a configuration document; other top-level sections are ignored.
inline Network parse_network(const std::string& text) { return network_from_json(parse_json(text)); }

inline Json network_to_json(const Network& net) {
  Json doc;
  Json branches = Json::array();
  for (const auto& b : net.branches) {
    branches.push_back({{"id", b.id}, {"cells", b.cells}, {"model", model_to_json(b.model)}});
  }
  doc["branches"] = branches;
  Json juncs = Json::array();
  for (const auto& j : net.junctions) {
    Json item;
    if (!j.id.empty()) item["id"] = j.id;
    item["incoming"] = j.incoming;
    item["outgoing"] = j.outgoing;
    juncs.push_back(item);
  }
  doc["junctions"] = juncs;
  Json bcs = Json::array();
  for (const auto& s : net.sources) {
    const bool pressure = std::holds_alternative<PressureBC>(s.kind);
    const Signal& sig = pressure ? std::get<PressureBC>(s.kind).signal : std::get<FlowBC>(s.kind).signal;
    bcs.push_back({{"branch", s.branch}, {"end", "x0"}, {"kind", pressure ? "pressure" : "flow"},
                   {"signal", signal_to_json(sig)}});
  }
  for (const auto& t : net.terminals) {
    if (const auto* wk = std::get_if<WindkesselBC>(&t.kind)) {
      bcs.push_back({{"branch", t.branch},
                     {"end", "x1"},
                     {"kind", "windkessel"},
                     {"params",
                      {{"eta", wk->eta}, {"delta", wk->delta}, {"epsilon", wk->epsilon}, {"w", signal_to_json(wk->w)}}}});
    } else {
      const bool pressure = std::holds_alternative<PressureBC>(t.kind);
      const Signal& sig = pressure ? std::get<PressureBC>(t.kind).signal : std::get<FlowBC>(t.kind).signal;
      bcs.push_back({{"branch", t.branch}, {"end", "x1"}, {"kind", pressure ? "pressure" : "flow"},
                     {"signal", signal_to_json(sig)}});
    }
  }
  doc["boundaries"] = bcs;
  return doc;
}

inline std::string serialize_network(const Network& net) { return network_to_json(net).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Run and study sections

struct InitialData {
  std::vector<InitialProfile> pressure;  ///< per branch, network order
  std::vector<InitialProfile> flow;
};

/// Defaults: pressure p0 on blood-flow branches and 0 on linear ones, flow 0.
inline InitialData initial_from_json(const Json& doc, const Network& net) {
  using namespace config_detail;
  InitialData out;
  for (const auto& b : net.branches) {
    const auto* bf = std::get_if<BloodFlowParams>(&b.model);
    out.pressure.push_back(Field::constant(bf ? bf->p0 : 0.0));
    out.flow.push_back(Field::constant(0.0));
  }
  if (!doc.is_object() || !doc.contains("initial")) return out;
  const Json& init = doc["initial"];
  if (!init.is_object()) fail("/initial", "expected an object keyed by branch id");
  for (const auto& [id, spec] : init.items()) {
    const auto idx = net.find_branch(id);
    if (!idx) fail("/initial/" + id, "unknown branch id '" + id + "'");
    if (spec.contains("p")) out.pressure[*idx] = profile_from_json(spec["p"], "/initial/" + id + "/p");
    if (spec.contains("q")) out.flow[*idx] = profile_from_json(spec["q"], "/initial/" + id + "/q");
  }
  return out;
}

struct ProbeSpec {
  std::string branch;
  double x = 0.0;
};

struct RunSection {
  double horizon = 0.0;
  std::optional<double> sigma;  ///< k / h on the finest branch
  std::optional<double> dt;
  int stride = 1;
  std::vector<ProbeSpec> probes;
  double blowup_bound = 1e12;
  bool explicit_windkessel = false;
};

inline RunSection run_section_from_json(const Json& doc) {
  using namespace config_detail;
  RunSection out;
  if (!doc.is_object() || !doc.contains("run")) return out;
  const Json& r = doc["run"];
  const std::string p = "/run";
  out.horizon = number_or(r, "horizon", 0.0, p);
  if (r.contains("sigma")) out.sigma = number(r["sigma"], p + "/sigma");
  if (r.contains("dt")) out.dt = number(r["dt"], p + "/dt");
  if (out.sigma && out.dt) fail(p, "give either sigma or dt, not both");
  if (r.contains("stride")) out.stride = integer(r["stride"], p + "/stride");
  out.blowup_bound = number_or(r, "blowup_bound", 1e12, p);
  if (r.contains("windkessel_closure")) {
    const std::string c = string_at(r, "windkessel_closure", p);
    if (c != "trapezoidal" && c != "explicit") fail(p + "/windkessel_closure", "expected trapezoidal or explicit");
    out.explicit_windkessel = c == "explicit";
  }
  if (r.contains("probes")) {
    const Json& probes = array_at(r, "probes", p);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const std::string pp = p + "/probes/" + std::to_string(i);
      out.probes.push_back({string_at(probes[i], "branch", pp), number_at(probes[i], "x", pp)});
    }
  }
  return out;
}

struct ManufacturedFields {
  Field p;
  Field q;
};

struct StudySection {
  std::vector<int> levels;
  double horizon = 0.5;
  double courant = 0.8;  ///< target sigma * max speed
  std::map<std::string, ManufacturedFields> manufactured;
  std::vector<double> eps = {1e-2, 1e-3, 1e-4};
  Field bump;  ///< x-profile of the stability perturbation
  double order_low = 0.8;
  double order_high = 1.3;
  std::string reference;  ///< "manufactured", "oracle" or "self"; empty selects automatically
};

inline StudySection study_section_from_json(const Json& doc) {
  using namespace config_detail;
  StudySection out;
  // sin^2(pi x) = (1 - cos(2 pi x)) / 2
  out.bump = Field{0.5, {FieldTerm{-0.5, CosFactor{2.0 * std::numbers::pi, 0.0}, UnitFactor{}}}};
  if (!doc.is_object() || !doc.contains("study")) return out;
  const Json& s = doc["study"];
  const std::string p = "/study";
  if (s.contains("levels")) {
    const Json& lv = array_at(s, "levels", p);
    for (std::size_t i = 0; i < lv.size(); ++i) out.levels.push_back(integer(lv[i], p + "/levels/" + std::to_string(i)));
  }
  out.horizon = number_or(s, "horizon", out.horizon, p);
  out.courant = number_or(s, "courant", out.courant, p);
  if (s.contains("eps")) out.eps = numbers(s["eps"], p + "/eps");
  if (s.contains("bump")) out.bump = field_from_json(s["bump"], p + "/bump");
  if (s.contains("order_window")) {
    const auto w = numbers(s["order_window"], p + "/order_window");
    if (w.size() != 2 || !(w[0] < w[1])) fail(p + "/order_window", "expected [low, high] with low < high");
    out.order_low = w[0];
    out.order_high = w[1];
  }
  if (s.contains("reference")) {
    out.reference = string_at(s, "reference", p);
    if (out.reference != "manufactured" && out.reference != "oracle" && out.reference != "self") {
      fail(p + "/reference", "expected manufactured, oracle or self");
    }
  }
  if (s.contains("manufactured")) {
    const Json& m = s["manufactured"];
    if (!m.is_object()) fail(p + "/manufactured", "expected an object keyed by branch id");
    for (const auto& [id, spec] : m.items()) {
      const std::string mp = p + "/manufactured/" + id;
      out.manufactured[id] = {field_from_json(require(spec, "p", mp), mp + "/p"),
                              field_from_json(require(spec, "q", mp), mp + "/q")};
    }
  }
  return out;
}

/// A whole configuration document.
struct Config {
  Network network;
  InitialData initial;
  RunSection run;
  StudySection study;
};

inline Config parse_config(const std::string& text) {
  const Json doc = parse_json(text);
  Config cfg;
  cfg.network = network_from_json(doc);
  cfg.initial = initial_from_json(doc, cfg.network);
  cfg.run = run_section_from_json(doc);
  cfg.study = study_section_from_json(doc);
  for (const auto& pr : cfg.run.probes) {
    if (!cfg.network.find_branch(pr.branch)) {
      throw ConfigError("/run/probes: unknown branch id '" + pr.branch + "'");
    }
  }
  for (const auto& [id, fields] : cfg.study.manufactured) {
    if (!cfg.network.find_branch(id)) throw ConfigError("/study/manufactured: unknown branch id '" + id + "'");
  }
  return cfg;
}

}  // namespace vesselnet
