#include "sconv/tensor.hpp"

#include <string>

#include "sconv/errors.hpp"

namespace sconv {

namespace {

void check_positive_dims(int channels, int height, int width, const char* what) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ShapeError(std::string(what) + " dims must be positive, got " +
                     std::to_string(channels) + "x" + std::to_string(height) +
                     "x" + std::to_string(width));
  }
}

}  // namespace

FeatureMap::FeatureMap(int channels, int height, int width)
    : channels(channels), height(height), width(width) {
  check_positive_dims(channels, height, width, "feature map");
  values.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
}

FeatureMap::FeatureMap(int channels, int height, int width,
                       std::vector<float> values)
    : channels(channels), height(height), width(width), values(std::move(values)) {
  check_positive_dims(channels, height, width, "feature map");
  if (this->values.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ShapeError("feature map value count does not match dims");
  }
}

Filter::Filter(int channels, int height, int width, std::vector<float> weights)
    : channels(channels), height(height), width(width), weights(std::move(weights)) {
  check_positive_dims(channels, height, width, "filter");
  if (this->weights.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ShapeError("filter weight count does not match dims");
  }
}

OutputDims conv_output_dims(int in_w, int in_h, int k_w, int k_h, int stride) {
  if (in_w < 1 || in_h < 1 || k_w < 1 || k_h < 1) {
    throw ShapeError("dims must be positive");
  }
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (k_w > in_w || k_h > in_h) {
    throw ShapeError("kernel " + std::to_string(k_w) + "x" + std::to_string(k_h) +
                     " larger than map " + std::to_string(in_w) + "x" +
                     std::to_string(in_h));
  }
  return {(in_w - k_w) / stride + 1, (in_h - k_h) / stride + 1};
}

FeatureMap dense_conv(const FeatureMap& map, const Filter& filter,
                      const ConvConfig& cfg, OpCount* counters) {
  if (filter.channels != map.channels) {
    throw ShapeError("filter channels " + std::to_string(filter.channels) +
                     " != map channels " + std::to_string(map.channels));
  }
  const OutputDims out =
      conv_output_dims(map.width, map.height, filter.width, filter.height, cfg.stride);
  FeatureMap result(1, out.height, out.width);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      float acc = 0.0f;
      for (int c = 0; c < map.channels; ++c) {
        for (int i = 0; i < filter.height; ++i) {
          for (int j = 0; j < filter.width; ++j) {
            acc += map.at(c, y * cfg.stride + i, x * cfg.stride + j) *
                   filter.at(c, i, j);
            if (counters) {
              ++counters->multiplications;
              // Per-channel convention: the first term of each channel starts
              // that channel's partial sum and is not an addition.
              if (i != 0 || j != 0) ++counters->additions;
            }
          }
        }
      }
      result.at(0, y, x) = acc;
    }
  }
  return result;
}

FeatureMap relu(const FeatureMap& map) {
  FeatureMap out = map;
  for (float& v : out.values) {
    v = v > 0.0f ? v : 0.0f;
  }
  return out;
}

FeatureMap pool(const FeatureMap& map, const PoolConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1) throw ShapeError("pool window must be positive");
  if (cfg.stride < 1) throw ConfigError("pool stride must be >= 1");
  const OutputDims out =
      conv_output_dims(map.width, map.height, cfg.width, cfg.height, cfg.stride);
  FeatureMap result(map.channels, out.height, out.width);
  const float window_count = static_cast<float>(cfg.width * cfg.height);
  for (int c = 0; c < map.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        if (cfg.mode == PoolMode::kMax) {
          float best = map.at(c, y * cfg.stride, x * cfg.stride);
          for (int i = 0; i < cfg.height; ++i) {
            for (int j = 0; j < cfg.width; ++j) {
              const float v = map.at(c, y * cfg.stride + i, x * cfg.stride + j);
              if (v > best) best = v;
            }
          }
          result.at(c, y, x) = best;
        } else {
          float sum = 0.0f;
          for (int i = 0; i < cfg.height; ++i) {
            for (int j = 0; j < cfg.width; ++j) {
              sum += map.at(c, y * cfg.stride + i, x * cfg.stride + j);
            }
          }
          result.at(c, y, x) = sum / window_count;
        }
      }
    }
  }
  return result;
}

Matrix im2col(const FeatureMap& map, int k_w, int k_h, const ConvConfig& cfg) {
  const OutputDims out = conv_output_dims(map.width, map.height, k_w, k_h, cfg.stride);
  Matrix m;
  m.rows = out.width * out.height;
  m.cols = map.channels * k_w * k_h;
  m.values.assign(static_cast<std::size_t>(m.rows) * m.cols, 0.0f);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int row = y * out.width + x;
      int col = 0;
      for (int c = 0; c < map.channels; ++c) {
        for (int i = 0; i < k_h; ++i) {
          for (int j = 0; j < k_w; ++j) {
            m.at(row, col++) = map.at(c, y * cfg.stride + i, x * cfg.stride + j);
          }
        }
      }
    }
  }
  return m;
}

double sparsity(const FeatureMap& map) {
  std::size_t zeros = 0;
  for (float v : map.values) {
    if (v == 0.0f) ++zeros;
  }
  return static_cast<double>(zeros) / static_cast<double>(map.values.size());
}

}  // namespace sconv
