#include "sconv/ecr.hpp"

#include <string>

#include "sconv/errors.hpp"

namespace sconv {

namespace {

LayerDims to_layer_dims(const EcrDims& d) {
  LayerDims out;
  out.in_w = d.in_w;
  out.in_h = d.in_h;
  out.k_w = d.k_w;
  out.k_h = d.k_h;
  out.stride = d.stride;
  out.channels = d.channels;
  return out;
}

void check_ecr(const EcrMap& ecr) {
  const EcrDims& d = ecr.dims;
  const int threads = d.out_w();
  const int slot = d.slot();
  if (static_cast<int>(ecr.block_rows.size()) != d.out_h()) {
    throw FormatError("block row count does not match output height");
  }
  for (const EcrBlockRow& row : ecr.block_rows) {
    const std::size_t want = static_cast<std::size_t>(threads) * slot;
    if (row.f_data.size() != want || row.k_data.size() != want ||
        row.offsets.size() != want || static_cast<int>(row.ptr.size()) != threads) {
      throw FormatError("block row arrays do not match thread count");
    }
    for (int p : row.ptr) {
      if (p < -1 || p > slot) {
        throw FormatError("corrupted ptr value " + std::to_string(p) +
                          " outside [-1, " + std::to_string(slot) + "]");
      }
    }
  }
}

}  // namespace

EcrGridShape ecr_grid_shape(int in_w, int in_h, int k_w, int k_h, int stride) {
  const OutputDims out = conv_output_dims(in_w, in_h, k_w, k_h, stride);
  return {out.height, out.width};
}

EcrMap ecr_convert(const FeatureMap& map, const Filter& filter,
                   const ConvConfig& cfg, const ExecConfig& exec) {
  if (filter.channels != map.channels) {
    throw ShapeError("filter channels " + std::to_string(filter.channels) +
                     " != map channels " + std::to_string(map.channels));
  }
  const OutputDims out =
      conv_output_dims(map.width, map.height, filter.width, filter.height, cfg.stride);

  EcrMap ecr;
  ecr.dims = {map.width, map.height, filter.width, filter.height, cfg.stride,
              map.channels};
  const int slot = ecr.dims.slot();
  ecr.block_rows.resize(out.height);
  for (EcrBlockRow& row : ecr.block_rows) {
    row.f_data.assign(static_cast<std::size_t>(out.width) * slot, 0.0f);
    row.k_data.assign(static_cast<std::size_t>(out.width) * slot, 0.0f);
    row.offsets.assign(static_cast<std::size_t>(out.width) * slot, -1);
    row.ptr.assign(out.width, -1);
  }

  const Grid grid = plan(to_layer_dims(ecr.dims), Format::kEcr);
  dispatch(
      grid,
      [&](int block, int thread, OpCount&) {
        EcrBlockRow& row = ecr.block_rows[block];
        const int base = thread * slot;
        int filled = 0;
        for (int c = 0; c < map.channels; ++c) {
          for (int i = 0; i < filter.height; ++i) {
            for (int j = 0; j < filter.width; ++j) {
              const float v =
                  map.at(c, block * cfg.stride + i, thread * cfg.stride + j);
              if (v != 0.0f) {
                row.f_data[base + filled] = v;
                row.k_data[base + filled] = filter.at(c, i, j);
                row.offsets[base + filled] = (c * filter.height + i) * filter.width + j;
                ++filled;
              }
            }
          }
        }
        row.ptr[thread] = filled == 0 ? -1 : filled;
      },
      exec);
  return ecr;
}

FeatureMap ecr_spmv_conv(const EcrMap& ecr, OpCount* counters,
                         const ExecConfig& exec) {
  check_ecr(ecr);
  const EcrDims& d = ecr.dims;
  const int slot = d.slot();
  FeatureMap out(1, d.out_h(), d.out_w());

  const Grid grid = plan(to_layer_dims(d), Format::kEcr);
  const DispatchStats stats = dispatch(
      grid,
      [&](int block, int thread, OpCount& ops) {
        const EcrBlockRow& row = ecr.block_rows[block];
        const int nnz = row.ptr[thread];
        if (nnz == -1) {
          out.at(0, block, thread) = 0.0f;
          return;
        }
        const int base = thread * slot;
        float acc = 0.0f;
        for (int p = base; p < base + nnz; ++p) {
          acc += row.f_data[p] * row.k_data[p];
        }
        out.at(0, block, thread) = acc;
        ops.multiplications += nnz;
        ops.additions += nnz > 0 ? nnz - 1 : 0;
      },
      exec);
  if (counters) counters->merge(stats.ops);
  return out;
}

std::vector<float> ecr_window(const EcrMap& ecr, int block, int thread) {
  const EcrDims& d = ecr.dims;
  if (block < 0 || block >= d.out_h() || thread < 0 || thread >= d.out_w()) {
    throw ShapeError("window index out of range");
  }
  const EcrBlockRow& row = ecr.block_rows[block];
  const int slot = d.slot();
  const int base = thread * slot;
  std::vector<float> window(slot, 0.0f);
  const int nnz = row.ptr[thread] == -1 ? 0 : row.ptr[thread];
  for (int p = 0; p < nnz; ++p) {
    window[row.offsets[base + p]] = row.f_data[base + p];
  }
  return window;
}

}  // namespace sconv
