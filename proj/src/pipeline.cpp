#include "sconv/pipeline.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "sconv/ecr.hpp"
#include "sconv/errors.hpp"
#include "sconv/pecr.hpp"

namespace sconv {

namespace {

using nlohmann::json;

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back(kBase64Chars[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(kBase64Chars[(v >> 18) & 63]);
    out.push_back(kBase64Chars[(v >> 12) & 63]);
    out.push_back(kBase64Chars[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string base64_decode(const std::string& text) {
  std::string out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = base64_value(c);
    if (v < 0) throw FormatError("invalid base64 character in weights");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string floats_to_le_bytes(const std::vector<float>& values) {
  std::string bytes;
  bytes.reserve(values.size() * 4);
  for (float f : values) {
    const std::uint32_t v = std::bit_cast<std::uint32_t>(f);
    bytes.push_back(static_cast<char>(v & 0xff));
    bytes.push_back(static_cast<char>((v >> 8) & 0xff));
    bytes.push_back(static_cast<char>((v >> 16) & 0xff));
    bytes.push_back(static_cast<char>((v >> 24) & 0xff));
  }
  return bytes;
}

std::vector<float> le_bytes_to_floats(const std::string& bytes) {
  if (bytes.size() % 4 != 0) throw FormatError("weight byte count not a multiple of 4");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + i * 4);
    const std::uint32_t v = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    values[i] = std::bit_cast<float>(v);
  }
  return values;
}

LayerDims layer_dims(const LayerSpec& layer, int in_channels, int in_h, int in_w) {
  LayerDims d;
  d.in_w = in_w;
  d.in_h = in_h;
  d.k_w = layer.filters.front().width;
  d.k_h = layer.filters.front().height;
  d.stride = layer.conv.stride;
  d.channels = in_channels;
  d.out_channels = static_cast<int>(layer.filters.size());
  if (layer.pool) {
    d.pool = PoolDims{layer.pool->width, layer.pool->height, layer.pool->stride};
  }
  return d;
}

FeatureMap stack_channels(const std::vector<FeatureMap>& channels) {
  const int h = channels.front().height;
  const int w = channels.front().width;
  FeatureMap out(static_cast<int>(channels.size()), h, w);
  for (std::size_t f = 0; f < channels.size(); ++f) {
    std::copy(channels[f].values.begin(), channels[f].values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(f) * h * w);
  }
  return out;
}

std::uint64_t map_bytes(int channels, int h, int w) {
  return 4ull * channels * h * w;
}

std::uint64_t filters_bytes(const LayerSpec& layer) {
  std::uint64_t total = 0;
  for (const Filter& f : layer.filters) total += 4ull * f.size();
  return total;
}

}  // namespace

void NetworkSpec::validate() const {
  if (in_channels < 1 || in_height < 1 || in_width < 1) {
    throw ConfigError("network input dims must be positive");
  }
  if (layers.empty()) throw ConfigError("network has no layers");
  int channels = in_channels;
  int h = in_height;
  int w = in_width;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& layer = layers[l];
    const std::string where = "layer " + std::to_string(l) + ": ";
    if (layer.filters.empty()) throw ConfigError(where + "no filters");
    const Filter& first = layer.filters.front();
    for (const Filter& f : layer.filters) {
      if (f.channels != first.channels || f.height != first.height ||
          f.width != first.width) {
        throw ConfigError(where + "filters have mismatched dims");
      }
    }
    if (first.channels != channels) {
      throw ConfigError(where + "filter channels " + std::to_string(first.channels) +
                        " != input channels " + std::to_string(channels));
    }
    if (layer.conv.stride < 1) throw ConfigError(where + "conv stride must be >= 1");
    if (layer.kind == LayerKind::kConvPool && !layer.pool) {
      throw ConfigError(where + "conv_pool layer without pool config");
    }
    if (layer.kind == LayerKind::kConv && layer.pool) {
      throw ConfigError(where + "conv layer with pool config");
    }
    const OutputDims conv_out =
        conv_output_dims(w, h, first.width, first.height, layer.conv.stride);
    h = conv_out.height;
    w = conv_out.width;
    if (layer.pool) {
      const OutputDims pool_out =
          conv_output_dims(w, h, layer.pool->width, layer.pool->height, layer.pool->stride);
      h = pool_out.height;
      w = pool_out.width;
    }
    channels = static_cast<int>(layer.filters.size());
  }
}

FeatureMap multichannel_conv(const FeatureMap& map,
                             const std::vector<Filter>& filters,
                             const ConvConfig& cfg, Method method,
                             const ExecConfig& exec, OpCount* counters) {
  if (filters.empty()) throw ConfigError("multichannel_conv requires filters");
  if (method == Method::kPecr) {
    throw ConfigError("multichannel_conv supports dense and ecr methods only");
  }
  std::vector<FeatureMap> channels;
  channels.reserve(filters.size());
  for (const Filter& f : filters) {
    if (method == Method::kDense) {
      channels.push_back(dense_conv(map, f, cfg, counters));
    } else {
      const EcrMap ecr = ecr_convert(map, f, cfg, exec);
      channels.push_back(ecr_spmv_conv(ecr, counters, exec));
    }
  }
  return stack_channels(channels);
}

ForwardResult forward(const NetworkSpec& net, const FeatureMap& input,
                      Method method, const ExecConfig& exec) {
  net.validate();
  if (input.channels != net.in_channels || input.height != net.in_height ||
      input.width != net.in_width) {
    throw ShapeError("input dims do not match network spec");
  }

  ForwardResult result;
  FeatureMap current = input;

  if (method != Method::kDense) {
    // One-time ingest: the input map and every layer's filters go up front.
    std::uint64_t h2d = map_bytes(input.channels, input.height, input.width);
    for (const LayerSpec& layer : net.layers) h2d += filters_bytes(layer);
    result.traffic.host_to_device_bytes = h2d;
  }

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    const LayerDims dims =
        layer_dims(layer, current.channels, current.height, current.width);
    const bool fuse = method == Method::kPecr &&
                      layer.kind == LayerKind::kConvPool &&
                      layer.activation == Activation::kRelu;

    try {
      if (method == Method::kDense) {
        result.traffic.merge(layer.pool ? traffic_separate(dims)
                                        : traffic_conv_only(dims));
        FeatureMap conv_out =
            multichannel_conv(current, layer.filters, layer.conv, Method::kDense,
                              exec, &result.ops);
        result.conv_outputs.push_back(conv_out);
        if (layer.activation == Activation::kRelu) conv_out = relu(conv_out);
        if (layer.pool) conv_out = pool(conv_out, *layer.pool);
        current = std::move(conv_out);
      } else if (fuse) {
        std::vector<FeatureMap> channels;
        channels.reserve(layer.filters.size());
        for (const Filter& f : layer.filters) {
          const PecrMap pecr =
              pecr_convert(current, f, layer.conv, *layer.pool, exec);
          channels.push_back(pecr_conv_pool(pecr, &result.ops, exec));
        }
        result.traffic.global_loads_bytes +=
            map_bytes(current.channels, current.height, current.width) +
            filters_bytes(layer);
        // The fused path never materializes convolution results off-chip.
        result.conv_outputs.push_back(FeatureMap(1, 1, 1));
        current = stack_channels(channels);
        result.traffic.global_stores_bytes +=
            map_bytes(current.channels, current.height, current.width);
      } else {
        if (method == Method::kPecr) {
          result.pecr_fallback_layers.push_back(static_cast<int>(l));
        }
        result.traffic.global_loads_bytes +=
            map_bytes(current.channels, current.height, current.width) +
            filters_bytes(layer);
        FeatureMap conv_out = multichannel_conv(
            current, layer.filters, layer.conv, Method::kEcr, exec, &result.ops);
        result.conv_outputs.push_back(conv_out);
        if (layer.activation == Activation::kRelu) conv_out = relu(conv_out);
        result.traffic.global_stores_bytes +=
            map_bytes(conv_out.channels, conv_out.height, conv_out.width);
        if (layer.pool) {
          result.traffic.global_loads_bytes +=
              map_bytes(conv_out.channels, conv_out.height, conv_out.width);
          conv_out = pool(conv_out, *layer.pool);
          result.traffic.global_stores_bytes +=
              map_bytes(conv_out.channels, conv_out.height, conv_out.width);
        }
        current = std::move(conv_out);
      }
    } catch (const DispatchError& e) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("layer " + std::to_string(l) + " failed: " + e.what());
    }
    result.layer_outputs.push_back(current);
  }

  if (method != Method::kDense) {
    result.traffic.device_to_host_bytes =
        map_bytes(current.channels, current.height, current.width);
  }
  result.output = std::move(current);
  return result;
}

std::string network_to_json(const NetworkSpec& net) {
  json doc;
  doc["version"] = 1;
  doc["input"] = {{"channels", net.in_channels},
                  {"height", net.in_height},
                  {"width", net.in_width}};
  doc["layers"] = json::array();
  for (const LayerSpec& layer : net.layers) {
    json j;
    j["kind"] = layer.kind == LayerKind::kConvPool ? "conv_pool" : "conv";
    const Filter& first = layer.filters.front();
    j["kernel"] = {{"h", first.height},
                   {"w", first.width},
                   {"in_ch", first.channels},
                   {"out_ch", static_cast<int>(layer.filters.size())}};
    j["strides"] = {{"conv", layer.conv.stride}};
    if (layer.pool) {
      j["pool"] = {{"h", layer.pool->height},
                   {"w", layer.pool->width},
                   {"stride", layer.pool->stride},
                   {"mode", layer.pool->mode == PoolMode::kMax ? "max" : "mean"}};
    }
    j["activation"] = layer.activation == Activation::kRelu ? "relu" : "none";
    std::vector<float> weights;
    for (const Filter& f : layer.filters) {
      weights.insert(weights.end(), f.weights.begin(), f.weights.end());
    }
    j["weights"] = base64_encode(floats_to_le_bytes(weights));
    doc["layers"].push_back(std::move(j));
  }
  return doc.dump(2);
}

NetworkSpec network_from_json(const std::string& text,
                              const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid network json: ") + e.what());
  }
  try {
    NetworkSpec net;
    net.in_channels = doc.at("input").at("channels").get<int>();
    net.in_height = doc.at("input").at("height").get<int>();
    net.in_width = doc.at("input").at("width").get<int>();
    for (const json& j : doc.at("layers")) {
      LayerSpec layer;
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "conv") {
        layer.kind = LayerKind::kConv;
      } else if (kind == "conv_pool") {
        layer.kind = LayerKind::kConvPool;
      } else {
        throw FormatError("unknown layer kind: " + kind);
      }
      const json& kernel = j.at("kernel");
      const int k_h = kernel.at("h").get<int>();
      const int k_w = kernel.at("w").get<int>();
      const int in_ch = kernel.at("in_ch").get<int>();
      const int out_ch = kernel.at("out_ch").get<int>();
      layer.conv.stride = j.at("strides").at("conv").get<int>();
      if (j.contains("pool")) {
        PoolConfig pool;
        pool.height = j["pool"].at("h").get<int>();
        pool.width = j["pool"].at("w").get<int>();
        pool.stride = j["pool"].at("stride").get<int>();
        const std::string mode = j["pool"].at("mode").get<std::string>();
        if (mode == "max") {
          pool.mode = PoolMode::kMax;
        } else if (mode == "mean") {
          pool.mode = PoolMode::kMean;
        } else {
          throw FormatError("unknown pool mode: " + mode);
        }
        layer.pool = pool;
      }
      const std::string activation = j.at("activation").get<std::string>();
      if (activation == "relu") {
        layer.activation = Activation::kRelu;
      } else if (activation == "none") {
        layer.activation = Activation::kNone;
      } else {
        throw FormatError("unknown activation: " + activation);
      }

      std::vector<float> weights;
      const json& w = j.at("weights");
      if (w.is_string()) {
        weights = le_bytes_to_floats(base64_decode(w.get<std::string>()));
      } else if (w.is_object() && w.contains("path")) {
        const std::filesystem::path path =
            base_dir / w.at("path").get<std::string>();
        std::ifstream file(path, std::ios::binary);
        if (!file) throw IoError("cannot open weights file: " + path.string());
        std::string bytes((std::istreambuf_iterator<char>(file)),
                          std::istreambuf_iterator<char>());
        weights = le_bytes_to_floats(bytes);
      } else {
        throw FormatError("weights must be a base64 string or {\"path\": ...}");
      }
      const std::size_t per_filter =
          static_cast<std::size_t>(in_ch) * k_h * k_w;
      if (weights.size() != per_filter * static_cast<std::size_t>(out_ch)) {
        throw FormatError("weight count does not match kernel dims");
      }
      for (int f = 0; f < out_ch; ++f) {
        layer.filters.emplace_back(
            in_ch, k_h, k_w,
            std::vector<float>(weights.begin() + static_cast<std::ptrdiff_t>(f) * per_filter,
                               weights.begin() + static_cast<std::ptrdiff_t>(f + 1) * per_filter));
      }
      net.layers.push_back(std::move(layer));
    }
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid network json: ") + e.what());
  }
}

void save_network(const NetworkSpec& net, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file << network_to_json(net) << "\n";
  if (!file) throw IoError("write failed: " + path.string());
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open: " + path.string());
  std::string text((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());
  return network_from_json(text, path.parent_path());
}

}  // namespace sconv
