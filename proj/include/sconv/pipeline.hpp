#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sconv/exec.hpp"
#include "sconv/metrics.hpp"
#include "sconv/tensor.hpp"

namespace sconv {

enum class Activation { kNone, kRelu };
enum class LayerKind { kConv, kConvPool };
enum class Method { kDense, kEcr, kPecr };

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::vector<Filter> filters;  // one per output channel, identical dims
  ConvConfig conv;
  std::optional<PoolConfig> pool;  // required for kConvPool
  Activation activation = Activation::kRelu;
};

struct NetworkSpec {
  int in_channels = 0;
  int in_height = 0;
  int in_width = 0;
  std::vector<LayerSpec> layers;

  /// Checks that every layer's input dims equal the previous layer's output
  /// dims and that pool configs are present where required.
  void validate() const;
};

struct ForwardResult {
  FeatureMap output;
  OpCount ops;
  TrafficReport traffic;
  std::vector<FeatureMap> conv_outputs;   // per layer, before activation
  std::vector<FeatureMap> layer_outputs;  // per layer, after activation + pool
  /// Layers the PECR method ran through the ECR path instead: conv-only
  /// layers, and conv_pool layers whose activation is not ReLU (the fused
  /// kernel folds ReLU into its pooling init and cannot omit it).
  std::vector<int> pecr_fallback_layers;
};

/// Runs the network with one up-front ingest and one final egress for the
/// compressed methods; the dense method round-trips every layer. Compressed
/// intermediates are re-converted between layers.
ForwardResult forward(const NetworkSpec& net, const FeatureMap& input,
                      Method method, const ExecConfig& exec = {});

/// One output channel per filter; each filter accumulates across all input
/// channels. Supports the dense and ECR methods.
FeatureMap multichannel_conv(const FeatureMap& map,
                             const std::vector<Filter>& filters,
                             const ConvConfig& cfg, Method method,
                             const ExecConfig& exec = {},
                             OpCount* counters = nullptr);

/// JSON document: input dims plus layers[] with kind, kernel {h,w,in_ch,
/// out_ch}, strides, pool, activation, and weights (base64 little-endian
/// 32-bit floats inline, or {"path": ...} relative to the document).
std::string network_to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const std::string& text,
                              const std::filesystem::path& base_dir = {});

void save_network(const NetworkSpec& net, const std::filesystem::path& path);
NetworkSpec load_network(const std::filesystem::path& path);

}  // namespace sconv
