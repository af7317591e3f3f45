#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vesselnet/vesselnet.hpp"

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(VESSELNET_SOURCE_DIR) / rel;
}

inline vesselnet::Config load(const std::string& rel) {
  return vesselnet::parse_config(vesselnet::read_file(source_path(rel)));
}

inline vesselnet::Branch linear_branch(const std::string& id, int cells, double a = 1.0, double b = 1.0,
                                       double c = 0.0, double f = 0.0, double g = 0.0) {
  return {id, cells, vesselnet::LinearParams{a, b, c, f, g}};
}

/// One branch with a pressure source at x0 and a flow terminal at x1.
inline vesselnet::Network single_branch(vesselnet::Branch b, vesselnet::Signal source = vesselnet::Signal::constant(0.0),
                                        vesselnet::Signal terminal = vesselnet::Signal::constant(0.0)) {
  vesselnet::Network net;
  const std::string id = b.id;
  net.branches.push_back(std::move(b));
  net.sources.push_back({id, vesselnet::PressureBC{std::move(source)}});
  net.terminals.push_back({id, vesselnet::FlowBC{std::move(terminal)}});
  return net;
}

/// parent -> junction -> (left, right); pressure source, flow and windkessel terminals.
inline vesselnet::Network bifurcation(int cells = 10) {
  using namespace vesselnet;
  Network net;
  net.branches = {linear_branch("parent", cells), linear_branch("left", cells), linear_branch("right", cells)};
  net.junctions = {{"J", {"parent"}, {"left", "right"}}};
  net.sources = {{"parent", PressureBC{Signal::constant(1.0)}}};
  net.terminals = {{"left", FlowBC{Signal::constant(0.0)}},
                   {"right", WindkesselBC{1.0, 1.0, 1.0, Signal::constant(1.0)}}};
  return net;
}

inline std::mt19937_64 rng(std::uint64_t seed = 20240601) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace testing
