#pragma once

#include <cstdint>
#include <optional>

namespace sconv {

/// Multiply/add tallies for one or more convolution passes. Merging is a
/// componentwise sum (commutative, associative, zero identity), so counters
/// collected by independent workers can be combined in any order.
struct OpCount {
  std::uint64_t multiplications = 0;
  std::uint64_t additions = 0;

  void merge(const OpCount& other) {
    multiplications += other.multiplications;
    additions += other.additions;
  }

  friend bool operator==(const OpCount&, const OpCount&) = default;
};

/// Modeled byte traffic for one conv(+pool) pass. host_to_device/device_to_host
/// cover the PCIe round trips; global_loads/global_stores cover device
/// off-chip memory accesses. Elements are 4-byte floats.
struct TrafficReport {
  std::uint64_t host_to_device_bytes = 0;
  std::uint64_t device_to_host_bytes = 0;
  std::uint64_t global_loads_bytes = 0;
  std::uint64_t global_stores_bytes = 0;

  std::uint64_t transfer_bytes() const {
    return host_to_device_bytes + device_to_host_bytes;
  }
  std::uint64_t total_bytes() const {
    return transfer_bytes() + global_loads_bytes + global_stores_bytes;
  }

  void merge(const TrafficReport& other) {
    host_to_device_bytes += other.host_to_device_bytes;
    device_to_host_bytes += other.device_to_host_bytes;
    global_loads_bytes += other.global_loads_bytes;
    global_stores_bytes += other.global_stores_bytes;
  }

  friend bool operator==(const TrafficReport&, const TrafficReport&) = default;
};

struct PoolDims {
  int width = 0;
  int height = 0;
  int stride = 1;
};

/// Geometry of one conv (+ optional pool) layer, shared by the analytic
/// op-count/traffic models and the grid planner.
struct LayerDims {
  int in_w = 0;
  int in_h = 0;
  int k_w = 0;
  int k_h = 0;
  int stride = 1;
  int channels = 1;
  int out_channels = 1;
  std::optional<PoolDims> pool;
};

/// Closed-form multiply count of a dense convolution:
/// windows_w * windows_h * k_w * k_h, scaled by the channel count.
std::uint64_t dense_mul_count(const LayerDims& dims);

/// Closed-form addition count: windows_w * windows_h * (k_w*k_h - 1) per
/// channel, scaled by the channel count. The instrumented dense path counts
/// with the same per-channel convention.
std::uint64_t dense_add_count(const LayerDims& dims);

/// Sparsity/size figure of merit: (sparsity * 100) / width.
double theta(double sparsity, int width);

/// Traffic when convolution and pooling run as separate passes: the conv
/// output makes a full host round trip before pooling.
TrafficReport traffic_separate(const LayerDims& dims);

/// Traffic when conv+ReLU+pool are fused: inputs go up once, only the pooled
/// result comes back, and no intermediate touches global memory.
TrafficReport traffic_fused(const LayerDims& dims);

/// Traffic of a single convolution pass with no pooling stage.
TrafficReport traffic_conv_only(const LayerDims& dims);

struct ReductionReport {
  double multiplications_pct = 0.0;  // (1 - sparse/dense) * 100
  double additions_pct = 0.0;
};

/// Percentage of work removed by the sparse path relative to the dense one.
/// Requires nonzero dense counts.
ReductionReport reduction_report(const OpCount& dense, const OpCount& sparse);

}  // namespace sconv
