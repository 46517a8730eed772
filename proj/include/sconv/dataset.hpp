#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sconv/tensor.hpp"

namespace sconv {

/// xoshiro256** seeded through SplitMix64, pinned so generated maps are
/// reproducible across platforms and standard libraries.
///
/// Test vectors (seed 42): next() yields
///   0x15780b2e0c2ec716, 0x6104d9866d113a7e, 0xae17533239e499a1.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform double in (0, 1]: ((next() >> 11) + 1) * 2^-53.
  double next_unit();
  /// Uniform integer in [0, n); uses the modulo reduction (pinned, the tiny
  /// bias is irrelevant here).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_[4];
};

/// Deterministic sparse map: exactly floor(sparsity * N) zeros, positions
/// chosen by a seeded Fisher-Yates shuffle, nonzeros uniform in (0, 1].
FeatureMap generate(int height, int width, int channels, double sparsity,
                    std::uint64_t seed);

/// Canonical 5x5 single-channel fixture, 8 nonzeros (sparsity 0.68).
FeatureMap fixture_f5();

/// Canonical 3x3 kernel fixture, weights 1..9 row-major.
Filter fixture_k3();

/// FMAP binary format: "FMAP" magic, u32 version (=1), u32 channels, height,
/// width, then channels*height*width little-endian 32-bit floats,
/// channel-major row-major. Save/load round-trips bit-exactly.
void save_fmap(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap load_fmap(const std::filesystem::path& path);

/// CSV alternative: line 1 is the literal header "channels,height,width",
/// line 2 the three dims, then one value per cell row-major (one map row per
/// line). Values are written with shortest round-trip formatting.
void save_csv(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap load_csv(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is text, everything else FMAP binary.
void save(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap load(const std::filesystem::path& path);

/// Brute-force nonzero count of every convolution window, raster order,
/// counting across all channels. Written as a naive enumeration, independent
/// of the compressed-format code paths it is used to check.
std::vector<int> window_nnz_counts(const FeatureMap& map, int k_w, int k_h,
                                   int stride);

struct SparsityProfile {
  double raw = 0.0;
  double extended = 0.0;  // zero fraction after im2col extension
};

std::vector<SparsityProfile> sparsity_profile(const std::vector<FeatureMap>& maps,
                                              int k_w, int k_h, int stride);

}  // namespace sconv
