#pragma once

#include <cstddef>
#include <vector>

#include "sconv/metrics.hpp"

namespace sconv {

/// Dense multi-channel 2-D tensor of 32-bit floats, channel-major then
/// row-major: (c, y, x) lives at offset c*height*width + y*width + x.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(int channels, int height, int width);  // zero-filled
  FeatureMap(int channels, int height, int width, std::vector<float> values);

  std::size_t size() const { return values.size(); }
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  float at(int c, int y, int x) const { return values[offset(c, y, x)]; }
  float& at(int c, int y, int x) { return values[offset(c, y, x)]; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Convolution kernel, same layout as FeatureMap. `channels` must match the
/// feature map it convolves; checked at operation entry.
struct Filter {
  int channels = 0;
  int height = 0;  // k_h
  int width = 0;   // k_w
  std::vector<float> weights;

  Filter() = default;
  Filter(int channels, int height, int width, std::vector<float> weights);

  std::size_t size() const { return weights.size(); }
  float at(int c, int i, int j) const {
    return weights[(static_cast<std::size_t>(c) * height + i) * width + j];
  }

  friend bool operator==(const Filter&, const Filter&) = default;
};

struct ConvConfig {
  int stride = 1;
};

enum class PoolMode { kMax, kMean };

struct PoolConfig {
  int width = 0;
  int height = 0;
  int stride = 1;
  PoolMode mode = PoolMode::kMax;
};

struct OutputDims {
  int width = 0;
  int height = 0;

  friend bool operator==(const OutputDims&, const OutputDims&) = default;
};

/// Valid-convolution output size with floor semantics: trailing rows/columns
/// that do not admit a full window are dropped.
OutputDims conv_output_dims(int in_w, int in_h, int k_w, int k_h, int stride);

/// Direct convolution, one filter -> single-channel output. The accumulation
/// order is fixed: channel-major, then row-major inside the window, left to
/// right. Counters, when supplied, tally every scalar multiply (zero operands
/// included) and k_w*k_h-1 additions per window per channel.
FeatureMap dense_conv(const FeatureMap& map, const Filter& filter,
                      const ConvConfig& cfg, OpCount* counters = nullptr);

/// Elementwise max(x, 0); -0.0 maps to +0.0.
FeatureMap relu(const FeatureMap& map);

/// Max- or mean-pooling per channel, valid windows only.
FeatureMap pool(const FeatureMap& map, const PoolConfig& cfg);

/// Row-major dense matrix used by the im2col lowering.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  float at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }
  float& at(int r, int c) {
    return values[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Extends every convolution window into one matrix row (rows = o_w*o_h,
/// cols = channels*k_w*k_h) so that im2col(map) * flatten(kernel) equals the
/// flattened dense_conv output.
Matrix im2col(const FeatureMap& map, int k_w, int k_h, const ConvConfig& cfg);

/// Fraction of exactly-zero elements (both zero signs count).
double sparsity(const FeatureMap& map);

}  // namespace sconv
