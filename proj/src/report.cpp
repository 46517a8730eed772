#include "sconv/report.hpp"

#include <bit>
#include <json.hpp>

#include "sconv/errors.hpp"

namespace sconv {

namespace {
using nlohmann::json;
}

std::string checksum_hex(const std::vector<float>& values) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (float f : values) {
    const std::uint32_t v = std::bit_cast<std::uint32_t>(f);
    for (int shift = 0; shift < 32; shift += 8) {
      hash ^= (v >> shift) & 0xff;
      hash *= 0x100000001b3ull;
    }
  }
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[hash & 0xf];
    hash >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

std::string run_report_to_json(const RunReport& r) {
  json dims = {{"in_w", r.dims.in_w},       {"in_h", r.dims.in_h},
               {"k_w", r.dims.k_w},         {"k_h", r.dims.k_h},
               {"stride", r.dims.stride},   {"channels", r.dims.channels},
               {"out_channels", r.dims.out_channels}};
  if (r.dims.pool) {
    dims["pool"] = {{"w", r.dims.pool->width},
                    {"h", r.dims.pool->height},
                    {"stride", r.dims.pool->stride}};
  }
  const json doc = {
      {"schema_version", r.schema_version},
      {"command", r.command},
      {"method", r.method},
      {"dims", dims},
      {"workers", r.workers},
      {"wall_ns", r.wall_ns},
      {"op_count",
       {{"multiplications", r.ops.multiplications}, {"additions", r.ops.additions}}},
      {"traffic",
       {{"host_to_device_bytes", r.traffic.host_to_device_bytes},
        {"device_to_host_bytes", r.traffic.device_to_host_bytes},
        {"global_loads_bytes", r.traffic.global_loads_bytes},
        {"global_stores_bytes", r.traffic.global_stores_bytes}}},
      {"grid",
       {{"blocks", r.grid.blocks},
        {"threads_per_block", r.grid.threads_per_block},
        {"shared_bytes_per_block", r.grid.shared_bytes_per_block}}},
      {"output_checksum", r.output_checksum}};
  return doc.dump(2);
}

RunReport run_report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    RunReport r;
    r.schema_version = doc.at("schema_version").get<int>();
    r.command = doc.at("command").get<std::string>();
    r.method = doc.at("method").get<std::string>();
    const json& dims = doc.at("dims");
    r.dims.in_w = dims.at("in_w").get<int>();
    r.dims.in_h = dims.at("in_h").get<int>();
    r.dims.k_w = dims.at("k_w").get<int>();
    r.dims.k_h = dims.at("k_h").get<int>();
    r.dims.stride = dims.at("stride").get<int>();
    r.dims.channels = dims.at("channels").get<int>();
    r.dims.out_channels = dims.at("out_channels").get<int>();
    if (dims.contains("pool")) {
      PoolDims pool;
      pool.width = dims["pool"].at("w").get<int>();
      pool.height = dims["pool"].at("h").get<int>();
      pool.stride = dims["pool"].at("stride").get<int>();
      r.dims.pool = pool;
    }
    r.workers = doc.at("workers").get<int>();
    r.wall_ns = doc.at("wall_ns").get<std::uint64_t>();
    r.ops.multiplications = doc.at("op_count").at("multiplications").get<std::uint64_t>();
    r.ops.additions = doc.at("op_count").at("additions").get<std::uint64_t>();
    const json& t = doc.at("traffic");
    r.traffic.host_to_device_bytes = t.at("host_to_device_bytes").get<std::uint64_t>();
    r.traffic.device_to_host_bytes = t.at("device_to_host_bytes").get<std::uint64_t>();
    r.traffic.global_loads_bytes = t.at("global_loads_bytes").get<std::uint64_t>();
    r.traffic.global_stores_bytes = t.at("global_stores_bytes").get<std::uint64_t>();
    const json& g = doc.at("grid");
    r.grid.blocks = g.at("blocks").get<int>();
    r.grid.threads_per_block = g.at("threads_per_block").get<int>();
    r.grid.shared_bytes_per_block = g.at("shared_bytes_per_block").get<std::uint64_t>();
    r.output_checksum = doc.at("output_checksum").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid run report json: ") + e.what());
  }
}

}  // namespace sconv
