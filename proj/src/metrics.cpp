#include "sconv/metrics.hpp"

#include <string>

#include "sconv/errors.hpp"

namespace sconv {

namespace {

int window_count(int in_extent, int k_extent, int stride, const char* axis) {
  if (k_extent > in_extent) {
    throw ShapeError(std::string("kernel exceeds input along ") + axis + ": " +
                     std::to_string(k_extent) + " > " + std::to_string(in_extent));
  }
  return (in_extent - k_extent) / stride + 1;
}

void check_layer(const LayerDims& d) {
  if (d.in_w < 1 || d.in_h < 1 || d.k_w < 1 || d.k_h < 1) {
    throw ShapeError("layer dims must be positive");
  }
  if (d.stride < 1) throw ConfigError("conv stride must be >= 1");
  if (d.channels < 1 || d.out_channels < 1) {
    throw ShapeError("channel counts must be positive");
  }
}

struct Extents {
  std::uint64_t input_bytes;
  std::uint64_t filter_bytes;
  std::uint64_t conv_bytes;
  std::uint64_t pool_bytes;  // 0 when no pool configured
};

Extents element_extents(const LayerDims& d) {
  check_layer(d);
  const std::uint64_t ow = window_count(d.in_w, d.k_w, d.stride, "width");
  const std::uint64_t oh = window_count(d.in_h, d.k_h, d.stride, "height");
  Extents e{};
  e.input_bytes = 4ull * d.channels * d.in_h * d.in_w;
  e.filter_bytes = 4ull * d.out_channels * d.channels * d.k_h * d.k_w;
  e.conv_bytes = 4ull * d.out_channels * oh * ow;
  if (d.pool) {
    const PoolDims& p = *d.pool;
    if (p.width < 1 || p.height < 1 || p.stride < 1) {
      throw ConfigError("pool dims must be positive");
    }
    const std::uint64_t pw = window_count(static_cast<int>(ow), p.width, p.stride, "pooled width");
    const std::uint64_t ph = window_count(static_cast<int>(oh), p.height, p.stride, "pooled height");
    e.pool_bytes = 4ull * d.out_channels * ph * pw;
  }
  return e;
}

}  // namespace

std::uint64_t dense_mul_count(const LayerDims& d) {
  check_layer(d);
  const std::uint64_t ow = window_count(d.in_w, d.k_w, d.stride, "width");
  const std::uint64_t oh = window_count(d.in_h, d.k_h, d.stride, "height");
  return ow * oh * static_cast<std::uint64_t>(d.k_w) * d.k_h * d.channels;
}

std::uint64_t dense_add_count(const LayerDims& d) {
  check_layer(d);
  const std::uint64_t ow = window_count(d.in_w, d.k_w, d.stride, "width");
  const std::uint64_t oh = window_count(d.in_h, d.k_h, d.stride, "height");
  return ow * oh * (static_cast<std::uint64_t>(d.k_w) * d.k_h - 1) * d.channels;
}

double theta(double sparsity, int width) {
  if (width <= 0) throw ConfigError("theta requires a positive width");
  return sparsity * 100.0 / static_cast<double>(width);
}

TrafficReport traffic_separate(const LayerDims& d) {
  if (!d.pool) throw ConfigError("traffic_separate requires pool dims");
  const Extents e = element_extents(d);
  TrafficReport t;
  t.host_to_device_bytes = e.input_bytes + e.filter_bytes + e.conv_bytes;
  t.device_to_host_bytes = e.conv_bytes + e.pool_bytes;
  t.global_loads_bytes = e.input_bytes + e.filter_bytes + e.conv_bytes;
  t.global_stores_bytes = e.conv_bytes + e.pool_bytes;
  return t;
}

TrafficReport traffic_fused(const LayerDims& d) {
  if (!d.pool) throw ConfigError("traffic_fused requires pool dims");
  const Extents e = element_extents(d);
  TrafficReport t;
  t.host_to_device_bytes = e.input_bytes + e.filter_bytes;
  t.device_to_host_bytes = e.pool_bytes;
  t.global_loads_bytes = e.input_bytes + e.filter_bytes;
  t.global_stores_bytes = e.pool_bytes;
  return t;
}

TrafficReport traffic_conv_only(const LayerDims& d) {
  const Extents e = element_extents(d);
  TrafficReport t;
  t.host_to_device_bytes = e.input_bytes + e.filter_bytes;
  t.device_to_host_bytes = e.conv_bytes;
  t.global_loads_bytes = e.input_bytes + e.filter_bytes;
  t.global_stores_bytes = e.conv_bytes;
  return t;
}

ReductionReport reduction_report(const OpCount& dense, const OpCount& sparse) {
  if (dense.multiplications == 0 || dense.additions == 0) {
    throw ConfigError("reduction_report requires nonzero dense counts");
  }
  ReductionReport r;
  r.multiplications_pct =
      (1.0 - static_cast<double>(sparse.multiplications) /
                 static_cast<double>(dense.multiplications)) *
      100.0;
  r.additions_pct = (1.0 - static_cast<double>(sparse.additions) /
                               static_cast<double>(dense.additions)) *
                    100.0;
  return r;
}

}  // namespace sconv
