#include "sconv/pecr.hpp"

#include <numeric>
#include <string>

#include "sconv/errors.hpp"

namespace sconv {

namespace {

LayerDims to_layer_dims(const PecrDims& d) {
  LayerDims out;
  out.in_w = d.in_w;
  out.in_h = d.in_h;
  out.k_w = d.k_w;
  out.k_h = d.k_h;
  out.stride = d.conv_stride;
  out.channels = d.channels;
  out.pool = PoolDims{d.pool.width, d.pool.height, d.pool.stride};
  return out;
}

void check_pecr(const PecrMap& pecr) {
  const PecrDims& d = pecr.dims;
  const int packs_w = pecr_pack_count(d.in_w, d.k_w, d.conv_stride, d.pool.width, d.pool.stride);
  const int packs_h = pecr_pack_count(d.in_h, d.k_h, d.conv_stride, d.pool.height, d.pool.stride);
  if (pecr.packs_h() != packs_h) throw FormatError("pack row count mismatch");
  if (pecr.kernel.size() !=
      static_cast<std::size_t>(d.channels) * d.k_h * d.k_w) {
    throw FormatError("kernel length does not match dims");
  }
  const int per_window_cap = d.channels * d.k_w * d.k_h;
  for (const auto& row : pecr.pool_rows) {
    if (static_cast<int>(row.size()) != packs_w) throw FormatError("pack count mismatch");
    for (const PecrPoolPack& pack : row) {
      if (static_cast<int>(pack.count.size()) != d.windows_per_pack()) {
        throw FormatError("count length does not match windows per pack");
      }
      std::size_t total = 0;
      for (int c : pack.count) {
        if (c < 0 || c > per_window_cap) {
          throw FormatError("count entry " + std::to_string(c) + " outside [0, " +
                            std::to_string(per_window_cap) + "]");
        }
        total += static_cast<std::size_t>(c);
      }
      if (pack.data.size() != total || pack.index.size() != total) {
        throw FormatError("data/index length inconsistent with counts");
      }
      for (int idx : pack.index) {
        if (idx < 0 || idx >= per_window_cap) {
          throw FormatError("index entry " + std::to_string(idx) + " out of range");
        }
      }
    }
  }
}

}  // namespace

int pecr_pack_count(int in_extent, int k_extent, int conv_stride,
                    int pool_extent, int pool_stride) {
  if (in_extent < 1 || k_extent < 1 || conv_stride < 1 || pool_extent < 1 ||
      pool_stride < 1) {
    throw ConfigError("pack count arguments must be positive");
  }
  const int numerator = in_extent - k_extent + conv_stride -
                        conv_stride * pool_extent + pool_stride * conv_stride;
  const int denominator = pool_stride * conv_stride;
  if (numerator <= 0 || numerator % denominator != 0) {
    throw ConfigError(
        "pool tiling does not divide extent " + std::to_string(in_extent) +
        ": (" + std::to_string(in_extent) + " - " + std::to_string(k_extent) +
        " + " + std::to_string(conv_stride) + " - " +
        std::to_string(conv_stride * pool_extent) + " + " +
        std::to_string(denominator) + ") / " + std::to_string(denominator) +
        " is not a positive integer");
  }
  return numerator / denominator;
}

PecrMap pecr_convert(const FeatureMap& map, const Filter& filter,
                     const ConvConfig& conv, const PoolConfig& pool,
                     const ExecConfig& exec) {
  if (filter.channels != map.channels) {
    throw ShapeError("filter channels " + std::to_string(filter.channels) +
                     " != map channels " + std::to_string(map.channels));
  }
  conv_output_dims(map.width, map.height, filter.width, filter.height, conv.stride);
  const int packs_w =
      pecr_pack_count(map.width, filter.width, conv.stride, pool.width, pool.stride);
  const int packs_h =
      pecr_pack_count(map.height, filter.height, conv.stride, pool.height, pool.stride);

  PecrMap pecr;
  pecr.dims = {map.width, map.height, filter.width,  filter.height,
               conv.stride, map.channels, pool};
  pecr.kernel = filter.weights;
  pecr.pool_rows.assign(packs_h, std::vector<PecrPoolPack>(packs_w));

  const Grid grid = plan(to_layer_dims(pecr.dims), Format::kPecr);
  dispatch(
      grid,
      [&](int block, int thread, OpCount&) {
        PecrPoolPack& pack = pecr.pool_rows[block][thread];
        pack.count.assign(pecr.dims.windows_per_pack(), 0);
        const int row0 = block * conv.stride * pool.stride;
        const int col0 = thread * conv.stride * pool.stride;
        for (int n = 0; n < pecr.dims.windows_per_pack(); ++n) {
          const int wy = row0 + (n / pool.width) * conv.stride;
          const int wx = col0 + (n % pool.width) * conv.stride;
          int num = 0;
          for (int c = 0; c < map.channels; ++c) {
            for (int i = 0; i < filter.height; ++i) {
              for (int j = 0; j < filter.width; ++j) {
                const float v = map.at(c, wy + i, wx + j);
                if (v != 0.0f) {
                  pack.data.push_back(v);
                  pack.index.push_back((c * filter.height + i) * filter.width + j);
                  ++num;
                }
              }
            }
          }
          pack.count[n] = num;
        }
      },
      exec);
  return pecr;
}

FeatureMap pecr_conv_pool(const PecrMap& pecr, OpCount* counters,
                          const ExecConfig& exec) {
  check_pecr(pecr);
  const PecrDims& d = pecr.dims;
  const int packs_w = pecr.packs_w();
  const int packs_h = pecr.packs_h();
  FeatureMap out(1, packs_h, packs_w);

  const Grid grid = plan(to_layer_dims(d), Format::kPecr);
  const DispatchStats stats = dispatch(
      grid,
      [&](int block, int thread, OpCount& ops) {
        const PecrPoolPack& pack = pecr.pool_rows[block][thread];
        const int windows = d.windows_per_pack();
        int pos = 0;
        // Max mode: starting the running max at zero realizes ReLU.
        float best = 0.0f;
        float sum = 0.0f;
        for (int n = 0; n < windows; ++n) {
          float acc = 0.0f;
          for (int p = pos; p < pos + pack.count[n]; ++p) {
            acc += pack.data[p] * pecr.kernel[pack.index[p]];
          }
          pos += pack.count[n];
          if (d.pool.mode == PoolMode::kMax) {
            if (acc > best) best = acc;
          } else {
            sum += acc > 0.0f ? acc : 0.0f;
          }
          ops.multiplications += pack.count[n];
          ops.additions += pack.count[n] > 0 ? pack.count[n] - 1 : 0;
        }
        out.at(0, block, thread) = d.pool.mode == PoolMode::kMax
                                       ? best
                                       : sum / static_cast<float>(windows);
      },
      exec);
  if (counters) counters->merge(stats.ops);
  return out;
}

std::vector<float> pecr_window(const PecrMap& pecr, int pack_row, int pack_col,
                               int n) {
  const PecrDims& d = pecr.dims;
  if (pack_row < 0 || pack_row >= pecr.packs_h() || pack_col < 0 ||
      pack_col >= pecr.packs_w() || n < 0 || n >= d.windows_per_pack()) {
    throw ShapeError("pack window index out of range");
  }
  const PecrPoolPack& pack = pecr.pool_rows[pack_row][pack_col];
  int pos = 0;
  for (int m = 0; m < n; ++m) pos += pack.count[m];
  std::vector<float> window(static_cast<std::size_t>(d.channels) * d.k_h * d.k_w, 0.0f);
  for (int p = pos; p < pos + pack.count[n]; ++p) {
    window[pack.index[p]] = pack.data[p];
  }
  return window;
}

}  // namespace sconv
