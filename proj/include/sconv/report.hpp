#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sconv/exec.hpp"
#include "sconv/metrics.hpp"

namespace sconv {

/// FNV-1a 64 over the little-endian byte image of the values; stable across
/// worker counts because outputs are bitwise deterministic.
std::string checksum_hex(const std::vector<float>& values);

/// One CLI run, serialized as versioned JSON.
struct RunReport {
  int schema_version = 1;
  std::string command;
  std::string method;
  LayerDims dims;
  int workers = 1;
  std::uint64_t wall_ns = 0;  // informational only
  OpCount ops;
  TrafficReport traffic;
  Grid grid;
  std::string output_checksum;
};

std::string run_report_to_json(const RunReport& report);
RunReport run_report_from_json(const std::string& text);

}  // namespace sconv
