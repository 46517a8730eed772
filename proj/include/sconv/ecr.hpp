#pragma once

#include <vector>

#include "sconv/exec.hpp"
#include "sconv/tensor.hpp"

namespace sconv {

/// Originating geometry of an ECR conversion.
struct EcrDims {
  int in_w = 0;
  int in_h = 0;
  int k_w = 0;
  int k_h = 0;
  int stride = 1;
  int channels = 1;

  int out_w() const { return (in_w - k_w) / stride + 1; }
  int out_h() const { return (in_h - k_h) / stride + 1; }
  /// Fixed per-thread capacity: one sub-range per channel, k_w*k_h each,
  /// packed contiguously in channel order.
  int slot() const { return channels * k_w * k_h; }
};

/// One compressed convolution block row. Each thread owns a fixed slot of
/// `slot()` entries in f_data/k_data; only the first ptr[t] entries are
/// meaningful, the remainder is filler and never read.
///
/// f_data holds the window's nonzeros in channel-major row-major scan order,
/// k_data the kernel weight at the same window-relative coordinate, and
/// offsets that coordinate itself (c*k_h*k_w + i*k_w + j). offsets is
/// host-side metadata for lossless reconstruction; it is not part of the
/// modeled shared-memory payload.
struct EcrBlockRow {
  std::vector<float> f_data;
  std::vector<float> k_data;
  std::vector<int> offsets;
  std::vector<int> ptr;  // per thread: nonzero count, or -1 for an empty window
};

struct EcrMap {
  EcrDims dims;
  std::vector<EcrBlockRow> block_rows;  // one per output row
};

struct EcrGridShape {
  int blocks = 0;
  int threads_per_block = 0;

  friend bool operator==(const EcrGridShape&, const EcrGridShape&) = default;
};

/// (blocks, threads_per_block) = (output rows, output columns).
EcrGridShape ecr_grid_shape(int in_w, int in_h, int k_w, int k_h, int stride);

/// Compresses a feature map against one filter: per thread, scan the window
/// channel-major row-major, keep nonzeros paired with their kernel weights,
/// and record the count in ptr (-1 when the window is all zero).
EcrMap ecr_convert(const FeatureMap& map, const Filter& filter,
                   const ConvConfig& cfg, const ExecConfig& exec = {});

/// SpMV-style convolution over the compressed rows. Threads with ptr == -1
/// write 0.0 and perform no multiplies. Counters tally sum(nnz) multiplies
/// and sum(max(nnz-1, 0)) additions.
FeatureMap ecr_spmv_conv(const EcrMap& ecr, OpCount* counters = nullptr,
                         const ExecConfig& exec = {});

/// Scatters one thread's nonzeros back into a dense window
/// (channel-major row-major, length slot()).
std::vector<float> ecr_window(const EcrMap& ecr, int block, int thread);

}  // namespace sconv
