#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "vesselnet/config.hpp"
#include "vesselnet/scheme.hpp"

namespace vesselnet {

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::string out = "t,branch,x,p,q\n";
  for (const auto& r : rows) {
    out += format_number(r.t) + ',' + r.branch + ',' + format_number(r.x) + ',' + format_number(r.p) + ',' +
           format_number(r.q) + '\n';
  }
  return out;
}

inline Json log_record_json(const LogRecord& rec) {
  Json j;
  j["t"] = rec.t;
  j["event"] = rec.event;
  j["branch"] = rec.branch;
  j["n"] = rec.node >= 0 ? Json(rec.node) : Json(nullptr);
  j["detail"] = rec.detail;
  return j;
}

/// One JSON object per line.
inline std::string diagnostics_jsonl(const std::vector<LogRecord>& log) {
  std::string out;
  for (const auto& rec : log) out += log_record_json(rec).dump() + '\n';
  return out;
}

inline Json abort_json(const AbortRecord& r) {
  return {{"kind", to_string(r.kind)}, {"branch", r.branch}, {"n", r.node}, {"t", r.time}, {"detail", r.detail}};
}

/// Run summary. `wall_time` is the only field that varies between identical runs.
inline Json summary_json(const RunResult& res, double wall_time) {
  Json j;
  j["final_time"] = res.end_time;
  j["steps"] = res.steps;
  j["wall_time"] = wall_time;
  j["max_speed"] = res.max_speed;
  j["junction_residual_max"] = res.max_junction_residual;
  j["port_pressures_identical"] = res.port_pressures_identical;
  j["aborted"] = res.abort.has_value();
  j["abort"] = res.abort ? abort_json(*res.abort) : Json(nullptr);
  return j;
}

/// Writes via a sibling temporary file and rename, so readers never see partial output.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace vesselnet
