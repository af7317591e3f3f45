#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace vesselnet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Json doc(const char* text) { return parse_json(text); }

const char* kSingle = R"({
  "branches": [{"id": "A", "cells": 8, "model": {"name": "blood_flow", "rho": 1, "beta": 1, "p0": 2, "a0": 1}},
               {"id": "B", "cells": 8, "model": {"name": "linear", "a": 1, "b": 1}}],
  "junctions": [{"id": "J", "incoming": ["A"], "outgoing": ["B"]}],
  "boundaries": [
    {"branch": "A", "end": "x0", "kind": "pressure", "signal": 2},
    {"branch": "B", "end": "x1", "kind": "flow", "signal": 0}
  ]
})";

std::string with_sections(const std::string& extra) {
  std::string base = kSingle;
  base.insert(base.rfind('}'), "," + extra);
  return base;
}

}  // namespace

TEST_CASE("signal documents", "[config][signal]") {
  CHECK(signal_from_json(doc("2.5"), "") == Signal::constant(2.5));
  CHECK(signal_from_json(doc(R"({"kind": "constant", "value": -1})"), "") == Signal::constant(-1.0));
  CHECK(signal_from_json(doc(R"({"kind": "sinusoid", "amplitude": 2, "period": 3})"), "") ==
        Signal::sinusoid(0.0, 2.0, 3.0, 0.0));
  CHECK(signal_from_json(doc(R"({"kind": "sinusoid", "mean": 1, "amplitude": 2, "period": 3, "phase": 0.5})"), "") ==
        Signal::sinusoid(1.0, 2.0, 3.0, 0.5));
  CHECK(signal_from_json(doc(R"({"kind": "table", "points": [[0, 1], [2, 3]]})"), "") ==
        Signal::table({{0.0, 1.0}, {2.0, 3.0}}));
  CHECK_THROWS_WITH(signal_from_json(doc(R"({"kind": "square"})"), "/s"), ContainsSubstring("unknown signal kind"));
  CHECK_THROWS_WITH(signal_from_json(doc(R"({"kind": "table", "points": [[0, 1, 2]]})"), "/s"),
                    ContainsSubstring("/s/points/0"));
  CHECK_THROWS_WITH(signal_from_json(doc(R"({"kind": "sinusoid", "period": 1})"), "/s"),
                    ContainsSubstring("missing required field 'amplitude'"));

  for (const Signal& s : {Signal::constant(1.25), Signal::sinusoid(1, 2, 3, 4), Signal::table({{0, 1}, {1, 0}})}) {
    CHECK(signal_from_json(signal_to_json(s), "") == s);
  }
  const Signal fn = Signal::function("trace", [](double t) { return t; }, [](double) { return 1.0; });
  CHECK_THROWS_AS(signal_to_json(fn), std::invalid_argument);
}

TEST_CASE("field documents", "[config][field]") {
  const Field c = field_from_json(doc("3"), "");
  CHECK(c.value(0.3, 0.7) == 3.0);
  const Field f = field_from_json(doc(R"({"offset": 2, "terms": [
      {"amp": 1.5, "x": {"kind": "sin", "omega": 3.14}, "t": {"kind": "cos"}},
      {"x": {"kind": "poly", "coeffs": [1, 2, 3]}}]})"),
                                  "");
  const double x = 0.3, t = 0.2;
  CHECK_THAT(f.value(x, t), WithinAbs(2.0 + 1.5 * std::sin(3.14 * x) * std::cos(t) + (1 + 2 * x + 3 * x * x), 1e-15));
  CHECK_THAT(f.dx(x, t), WithinAbs(1.5 * 3.14 * std::cos(3.14 * x) * std::cos(t) + (2 + 6 * x), 1e-14));
  CHECK_THAT(f.dt(x, t), WithinAbs(-1.5 * std::sin(3.14 * x) * std::sin(t), 1e-15));
  CHECK(field_from_json(field_to_json(f), "") == f);
  CHECK_THROWS_WITH(field_from_json(doc(R"({"terms": [{"x": {"kind": "tan"}}]})"), "/f"),
                    ContainsSubstring("unknown factor kind 'tan'"));
  CHECK_THROWS_AS(field_from_json(doc("\"one\""), ""), ConfigError);
}

TEST_CASE("initial profile documents", "[config][field]") {
  const InitialProfile table = profile_from_json(doc(R"({"table": {"x": [0, 0.5, 1], "values": [0, 2, 1]}})"), "");
  CHECK(initial_value(table, 0.25) == 1.0);
  CHECK(initial_value(table, 0.75) == 1.5);
  CHECK_THROWS_WITH(profile_from_json(doc(R"({"table": {"x": [0, 1], "values": [0]}})"), "/p"),
                    ContainsSubstring("equal length"));
  CHECK_THROWS_WITH(profile_from_json(doc(R"({"table": {"x": [0.5, 0.5], "values": [0, 1]}})"), "/p"),
                    ContainsSubstring("strictly increasing"));
}

TEST_CASE("model documents", "[config][model]") {
  SECTION("linear defaults") {
    const ModelSpec m = model_from_json(doc(R"({"name": "linear", "a": 2, "b": 3})"), "");
    CHECK(std::get<LinearParams>(m) == LinearParams{2, 3, 0, 0, 0});
    CHECK_THROWS_WITH(model_from_json(doc(R"({"name": "linear", "a": 0, "b": 3})"), "/m"),
                      ContainsSubstring("a > 0"));
    CHECK_THROWS_WITH(model_from_json(doc(R"({"name": "linear", "a": 1})"), "/m"),
                      ContainsSubstring("missing required field 'b'"));
  }
  SECTION("blood flow area profiles") {
    const auto bf = [](const char* a0) {
      return std::get<BloodFlowParams>(model_from_json(
          doc((std::string(R"({"name": "blood_flow", "rho": 1, "beta": 2, "p0": 3, "a0": )") + a0 + "}").c_str()),
          ""));
    };
    CHECK(bf("1.5").a0 == AreaProfileSpec{ConstantArea{1.5}});
    CHECK(bf(R"({"kind": "constant", "value": 2})").a0 == AreaProfileSpec{ConstantArea{2.0}});
    CHECK(bf(R"({"kind": "linear", "alpha": 1, "gamma": -0.5})").a0 == AreaProfileSpec{LinearTaper{1.0, -0.5}});
    CHECK(bf(R"({"kind": "table", "x": [0, 1], "areas": [1, 2]})").a0 ==
          AreaProfileSpec{SplineArea{{0.0, 1.0}, {1.0, 2.0}}});
    const BloodFlowParams p = bf("1");
    CHECK(p.mu == 0.0);
    CHECK(p.p_min == 0.0);
    CHECK(p.beta == 2.0);
    CHECK_THROWS_WITH(bf(R"({"kind": "linear", "alpha": 1, "gamma": -1.5})"), ContainsSubstring("positive"));
    CHECK_THROWS_WITH(model_from_json(doc(R"({"name": "blood_flow", "rho": 1, "beta": -1, "p0": 1, "a0": 1})"), "/m"),
                      ContainsSubstring("beta > 0"));
  }
  SECTION("round trip") {
    const ModelSpec specs[] = {LinearParams{1, 2, 3, 4, 5},
                               BloodFlowParams{1.05, 0.04, 0.7, 1.3, LinearTaper{1, -0.2}, 0.0},
                               BloodFlowParams{1.0, 0.0, 1.0, 1.0, SplineArea{{0, 0.5, 1}, {1, 0.9, 0.8}}, 1e-3}};
    for (const auto& s : specs) CHECK(model_from_json(model_to_json(s), "") == s);
  }
}

TEST_CASE("windkessel boundary documents", "[config][network]") {
  const auto net_with = [](const char* bc) {
    return parse_network(std::string(R"({"branches": [{"id": "A", "cells": 4, "model": {"name": "linear", "a": 1, "b": 1}}],
      "boundaries": [{"branch": "A", "end": "x0", "kind": "pressure", "signal": 0}, )") +
                         bc + "]}");
  };
  const Network params =
      net_with(R"({"branch": "A", "end": "x1", "kind": "windkessel", "params": {"eta": 1, "delta": 2, "epsilon": 3, "w": 4}})");
  CHECK(std::get<WindkesselBC>(params.terminals[0].kind) == WindkesselBC{1, 2, 3, Signal::constant(4)});
  const Network circuit =
      net_with(R"({"branch": "A", "end": "x1", "kind": "windkessel", "circuit": {"r1": 1, "r2": 1, "cap": 1}})");
  CHECK(std::get<WindkesselBC>(circuit.terminals[0].kind) == WindkesselBC{1, 1, 2, Signal::constant(0)});
  CHECK_THROWS_WITH(net_with(R"({"branch": "A", "end": "x1", "kind": "windkessel", "circuit": {"r1": 1, "r2": 1, "cap": 0}})"),
                    ContainsSubstring("/boundaries/1/circuit"));
  CHECK_THROWS_WITH(net_with(R"({"branch": "A", "end": "x0", "kind": "windkessel", "params": {}})"),
                    ContainsSubstring("attach at x1"));
  CHECK_THROWS_WITH(net_with(R"({"branch": "A", "end": "x2", "kind": "flow", "signal": 0})"),
                    ContainsSubstring("end must be"));
  CHECK_THROWS_WITH(net_with(R"({"branch": "A", "end": "x1", "kind": "velocity", "signal": 0})"),
                    ContainsSubstring("unknown boundary kind"));
}

TEST_CASE("initial data section", "[config]") {
  const Config plain = parse_config(kSingle);
  CHECK(initial_value(plain.initial.pressure[0], 0.5) == 2.0);
  CHECK(initial_value(plain.initial.pressure[1], 0.5) == 0.0);
  CHECK(initial_value(plain.initial.flow[0], 0.5) == 0.0);

  const Config given = parse_config(with_sections(R"("initial": {"B": {"p": 1.5, "q": {"table": {"x": [0, 1], "values": [0, 1]}}}})"));
  CHECK(initial_value(given.initial.pressure[0], 0.5) == 2.0);
  CHECK(initial_value(given.initial.pressure[1], 0.5) == 1.5);
  CHECK(initial_value(given.initial.flow[1], 0.25) == 0.25);
  CHECK_THROWS_WITH(parse_config(with_sections(R"("initial": {"Z": {"p": 1}})")), ContainsSubstring("unknown branch id 'Z'"));
}

TEST_CASE("run section", "[config]") {
  const Config none = parse_config(kSingle);
  CHECK(none.run.horizon == 0.0);
  CHECK_FALSE(none.run.sigma);
  CHECK_FALSE(none.run.dt);
  CHECK(none.run.stride == 1);
  CHECK(none.run.blowup_bound == 1e12);

  const Config cfg = parse_config(with_sections(
      R"("run": {"horizon": 2, "sigma": 0.4, "stride": 5, "windkessel_closure": "explicit",
                 "probes": [{"branch": "A", "x": 0.5}]})"));
  CHECK(cfg.run.horizon == 2.0);
  CHECK(cfg.run.sigma == 0.4);
  CHECK(cfg.run.stride == 5);
  CHECK(cfg.run.explicit_windkessel);
  REQUIRE(cfg.run.probes.size() == 1);
  CHECK(cfg.run.probes[0].branch == "A");

  CHECK_THROWS_WITH(parse_config(with_sections(R"("run": {"sigma": 0.4, "dt": 0.01})")),
                    ContainsSubstring("either sigma or dt"));
  CHECK_THROWS_WITH(parse_config(with_sections(R"("run": {"probes": [{"branch": "Q", "x": 0}]})")),
                    ContainsSubstring("unknown branch id 'Q'"));
  CHECK_THROWS_WITH(parse_config(with_sections(R"("run": {"windkessel_closure": "midpoint"})")),
                    ContainsSubstring("trapezoidal or explicit"));
  CHECK_THROWS_WITH(parse_config(with_sections(R"("run": {"stride": 1.5})")), ContainsSubstring("expected an integer"));
}

TEST_CASE("study section", "[config]") {
  const Config none = parse_config(kSingle);
  CHECK(none.study.levels.empty());
  CHECK(none.study.horizon == 0.5);
  CHECK(none.study.courant == 0.8);
  CHECK(none.study.eps == std::vector<double>{1e-2, 1e-3, 1e-4});
  CHECK(none.study.reference.empty());
  for (double x : {0.0, 0.25, 0.5, 0.9}) {
    const double s = std::sin(std::numbers::pi * x);
    CHECK_THAT(none.study.bump.value(x, 0.0), WithinAbs(s * s, 1e-15));
  }

  const Config cfg = parse_config(with_sections(
      R"("study": {"levels": [10, 20], "horizon": 0.25, "courant": 0.5, "eps": [0.1],
                   "order_window": [0.9, 1.1], "reference": "self",
                   "manufactured": {"A": {"p": 2, "q": 0}}})"));
  CHECK(cfg.study.levels == std::vector<int>{10, 20});
  CHECK(cfg.study.horizon == 0.25);
  CHECK(cfg.study.order_low == 0.9);
  CHECK(cfg.study.order_high == 1.1);
  CHECK(cfg.study.reference == "self");
  CHECK(cfg.study.manufactured.at("A").p == Field::constant(2.0));

  CHECK_THROWS_AS(parse_config(with_sections(R"("study": {"order_window": [1.1, 0.9]})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_sections(R"("study": {"reference": "exact"})")), ConfigError);
  CHECK_THROWS_WITH(parse_config(with_sections(R"("study": {"manufactured": {"Z": {"p": 1, "q": 1}}})")),
                    ContainsSubstring("unknown branch id 'Z'"));
}

TEST_CASE("shipped configurations parse and validate", "[config]") {
  for (const char* name : {"bifurcation", "constant_state", "manufactured_bifurcation", "manufactured_branch",
                           "manufactured_windkessel", "oracle_linear", "oracle_windkessel", "stability_blood_flow",
                           "stability_linear", "bad_boundary_sign"}) {
    INFO(name);
    const Config cfg = testing::load(std::string("configs/") + name + ".json");
    CHECK(validate_topology(cfg.network).ok());
  }
}

TEST_CASE("number formatting round-trips", "[config][output]") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(0.1 + 0.2) == "0.30000000000000004");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-2.0) == "-2");
  CHECK(format_number(1e-20) == "1e-20");
  auto g = testing::rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(testing::uniform(g, -1.0, 1.0), static_cast<int>(g() % 200) - 100);
    CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("probe CSV and diagnostics log are pinned", "[config][output][golden]") {
  const std::vector<ProbeRow> rows = {{0.25, "aorta", 0.5, 1.0, -0.125}, {0.5, "iliac_l", 1.0, 0.1, 3e-9}};
  CHECK(probe_csv(rows) == read_file(testing::source_path("tests/golden/probes.csv")));
  CHECK(probe_csv({}) == "t,branch,x,p,q\n");

  const std::vector<LogRecord> log = {{0.0, "compatibility", "aorta", 0, "source pressure: mismatch"},
                                      {1.5, "cfl_violation", "iliac_r", 7, "courant 1.2"},
                                      {0.0, "compatibility", "aorta", -1, "junction mass balance"}};
  CHECK(diagnostics_jsonl(log) == read_file(testing::source_path("tests/golden/diagnostics.jsonl")));
}

TEST_CASE("summary fields", "[config][output]") {
  RunResult res;
  res.steps = 10;
  res.end_time = 0.5;
  res.max_speed = 2.0;
  Json j = summary_json(res, 0.25);
  CHECK(j["final_time"] == 0.5);
  CHECK(j["steps"] == 10);
  CHECK(j["aborted"] == false);
  CHECK(j["abort"].is_null());
  CHECK(j["port_pressures_identical"] == true);
  res.abort = AbortRecord{AbortKind::Blowup, "A", 3, 0.4, "big"};
  j = summary_json(res, 0.25);
  CHECK(j["aborted"] == true);
  CHECK(j["abort"]["kind"] == "blowup");
  CHECK(j["abort"]["n"] == 3);
}

TEST_CASE("atomic writes leave no temporary file", "[config][output]") {
  const auto dir = std::filesystem::path(VESSELNET_BINARY_DIR) / "test_config_out";
  std::filesystem::remove_all(dir);
  write_atomic(dir / "sub" / "a.txt", "hello\n");
  CHECK(read_file(dir / "sub" / "a.txt") == "hello\n");
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "a.txt.tmp"));
  write_atomic(dir / "sub" / "a.txt", "bye\n");
  CHECK(read_file(dir / "sub" / "a.txt") == "bye\n");
}
