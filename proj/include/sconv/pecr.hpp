#pragma once

#include <vector>

#include "sconv/exec.hpp"
#include "sconv/tensor.hpp"

namespace sconv {

/// Pooling packs per axis under fused tiling:
/// (in - k + conv_stride - conv_stride*pool + pool_stride*conv_stride) /
/// (pool_stride * conv_stride). Rejects configurations where this is not a
/// positive integer: the tiling would otherwise read out of bounds.
int pecr_pack_count(int in_extent, int k_extent, int conv_stride,
                    int pool_extent, int pool_stride);

/// Originating geometry of a PECR conversion.
struct PecrDims {
  int in_w = 0;
  int in_h = 0;
  int k_w = 0;
  int k_h = 0;
  int conv_stride = 1;
  int channels = 1;
  PoolConfig pool;

  /// Input tile consumed by one pack: k + conv_stride*(pool - 1) per axis.
  int tile_w() const { return k_w + conv_stride * (pool.width - 1); }
  int tile_h() const { return k_h + conv_stride * (pool.height - 1); }
  int windows_per_pack() const { return pool.width * pool.height; }
  /// Worst-case data/index entries for one pack.
  int capacity() const { return windows_per_pack() * channels * k_w * k_h; }
};

/// One pooling pack: the nonzeros of all pool_w*pool_h convolution windows of
/// one pooling window, concatenated left-to-right top-to-bottom. index[p] is
/// the kernel offset (c*k_h*k_w + i*k_w + j) of data[p]'s window-relative
/// position; count[n] is the nonzero count of window n.
struct PecrPoolPack {
  std::vector<float> data;
  std::vector<int> index;
  std::vector<int> count;
};

struct PecrMap {
  PecrDims dims;
  std::vector<float> kernel;  // flattened filter, channel-major row-major
  std::vector<std::vector<PecrPoolPack>> pool_rows;  // [pack_row][pack_col]

  int packs_w() const { return pool_rows.empty() ? 0 : static_cast<int>(pool_rows.front().size()); }
  int packs_h() const { return static_cast<int>(pool_rows.size()); }
};

/// Compresses a feature map for fused conv+pool: one pack per pooling window,
/// windows scanned left-to-right top-to-bottom within the pack, each window
/// scanned channel-major row-major.
PecrMap pecr_convert(const FeatureMap& map, const Filter& filter,
                     const ConvConfig& conv, const PoolConfig& pool,
                     const ExecConfig& exec = {});

/// Fused convolution + ReLU + pooling: each pack reduces to one scalar
/// without materializing per-window convolution results. Max mode folds ReLU
/// into the zero-initialized running max; mean mode applies ReLU per window
/// result before averaging. Counters tally sum(count) multiplies per pack.
FeatureMap pecr_conv_pool(const PecrMap& pecr, OpCount* counters = nullptr,
                          const ExecConfig& exec = {});

/// Scatters window `n` of one pack back into a dense window
/// (channel-major row-major, length channels*k_h*k_w).
std::vector<float> pecr_window(const PecrMap& pecr, int pack_row, int pack_col,
                               int n);

}  // namespace sconv
