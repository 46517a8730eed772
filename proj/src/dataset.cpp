#include "sconv/dataset.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "sconv/errors.hpp"

namespace sconv {

namespace {

std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr char kMagic[4] = {'F', 'M', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;
// Caps payloads at 1Gi elements; anything above is a corrupt header.
constexpr std::uint64_t kMaxElements = 1ull << 30;

void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string format_float(float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& s : state_) s = splitmix64_next(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl64(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double Rng::next_unit() {
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) { return next() % n; }

FeatureMap generate(int height, int width, int channels, double sparsity,
                    std::uint64_t seed) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("sparsity must be in [0, 1], got " + std::to_string(sparsity));
  }
  FeatureMap map(channels, height, width);
  const std::size_t total = map.size();
  const auto zeros = static_cast<std::size_t>(
      std::floor(sparsity * static_cast<double>(total)));

  Rng rng(seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = total - 1; i > 0; --i) {
    std::swap(order[i], order[rng.next_below(i + 1)]);
  }
  std::vector<char> is_zero(total, 0);
  for (std::size_t i = 0; i < zeros; ++i) is_zero[order[i]] = 1;

  for (std::size_t pos = 0; pos < total; ++pos) {
    map.values[pos] = is_zero[pos] ? 0.0f : static_cast<float>(rng.next_unit());
  }
  return map;
}

FeatureMap fixture_f5() {
  return FeatureMap(1, 5, 5,
                    {1, 0, 0, 2, 0,  //
                     0, 0, 3, 0, 0,  //
                     0, 4, 0, 0, 5,  //
                     0, 0, 6, 0, 0,  //
                     7, 0, 0, 8, 0});
}

Filter fixture_k3() {
  return Filter(1, 3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
}

void save_fmap(const FeatureMap& map, const std::filesystem::path& path) {
  std::string out;
  out.reserve(20 + map.size() * 4);
  out.append(kMagic, 4);
  append_u32le(out, kVersion);
  append_u32le(out, static_cast<std::uint32_t>(map.channels));
  append_u32le(out, static_cast<std::uint32_t>(map.height));
  append_u32le(out, static_cast<std::uint32_t>(map.width));
  for (float v : map.values) {
    append_u32le(out, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path.string());
}

FeatureMap load_fmap(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path.string());
  std::string raw((std::istreambuf_iterator<char>(file)),
                  std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 4 || std::memcmp(raw.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not an FMAP file: " + path.string());
  }
  if (raw.size() < 20) throw FormatError("truncated header: " + path.string());
  const std::uint32_t version = read_u32le(bytes + 4);
  if (version != kVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + ": " +
                      path.string());
  }
  const std::uint32_t channels = read_u32le(bytes + 8);
  const std::uint32_t height = read_u32le(bytes + 12);
  const std::uint32_t width = read_u32le(bytes + 16);
  const std::uint64_t total =
      static_cast<std::uint64_t>(channels) * height * width;
  if (channels == 0 || height == 0 || width == 0 || total > kMaxElements) {
    throw FormatError("invalid dims in header: " + path.string());
  }
  if (raw.size() < 20 + total * 4) {
    throw FormatError("truncated payload: " + path.string());
  }
  std::vector<float> values(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    values[i] = std::bit_cast<float>(read_u32le(bytes + 20 + i * 4));
  }
  return FeatureMap(static_cast<int>(channels), static_cast<int>(height),
                    static_cast<int>(width), std::move(values));
}

void save_csv(const FeatureMap& map, const std::filesystem::path& path) {
  std::string out = "channels,height,width\n";
  out += std::to_string(map.channels) + "," + std::to_string(map.height) + "," +
         std::to_string(map.width) + "\n";
  for (int c = 0; c < map.channels; ++c) {
    for (int y = 0; y < map.height; ++y) {
      for (int x = 0; x < map.width; ++x) {
        out += format_float(map.at(c, y, x));
        out += (x + 1 == map.width) ? '\n' : ',';
      }
    }
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file << out;
  if (!file) throw IoError("write failed: " + path.string());
}

FeatureMap load_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open: " + path.string());
  std::string header;
  if (!std::getline(file, header)) throw FormatError("empty csv: " + path.string());
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) {
    header.pop_back();
  }
  if (header != "channels,height,width") {
    throw FormatError("bad csv header: " + path.string());
  }
  std::string dims_line;
  if (!std::getline(file, dims_line)) {
    throw FormatError("missing dims line: " + path.string());
  }
  int channels = 0, height = 0, width = 0;
  {
    const char* p = dims_line.c_str();
    const char* end = p + dims_line.size();
    for (int* field : {&channels, &height, &width}) {
      auto res = std::from_chars(p, end, *field);
      if (res.ec != std::errc{}) throw FormatError("bad dims line: " + path.string());
      p = res.ptr;
      if (p != end && *p == ',') ++p;
    }
  }
  if (channels < 1 || height < 1 || width < 1 ||
      static_cast<std::uint64_t>(channels) * height * width > kMaxElements) {
    throw FormatError("invalid dims in header: " + path.string());
  }
  const std::size_t total =
      static_cast<std::size_t>(channels) * height * width;
  std::vector<float> values;
  values.reserve(total);
  std::string rest((std::istreambuf_iterator<char>(file)),
                   std::istreambuf_iterator<char>());
  const char* p = rest.c_str();
  const char* end = p + rest.size();
  while (values.size() < total) {
    while (p != end && (*p == ',' || *p == '\n' || *p == '\r' || *p == ' ' || *p == '\t')) {
      ++p;
    }
    if (p == end) throw FormatError("truncated payload: " + path.string());
    float v = 0.0f;
    auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{}) throw FormatError("bad value in csv: " + path.string());
    values.push_back(v);
    p = res.ptr;
  }
  return FeatureMap(channels, height, width, std::move(values));
}

void save(const FeatureMap& map, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    save_csv(map, path);
  } else {
    save_fmap(map, path);
  }
}

FeatureMap load(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_csv(path);
  return load_fmap(path);
}

std::vector<int> window_nnz_counts(const FeatureMap& map, int k_w, int k_h,
                                   int stride) {
  const OutputDims out = conv_output_dims(map.width, map.height, k_w, k_h, stride);
  std::vector<int> counts;
  counts.reserve(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      int nnz = 0;
      for (int c = 0; c < map.channels; ++c) {
        for (int i = 0; i < k_h; ++i) {
          for (int j = 0; j < k_w; ++j) {
            if (map.at(c, y * stride + i, x * stride + j) != 0.0f) ++nnz;
          }
        }
      }
      counts.push_back(nnz);
    }
  }
  return counts;
}

std::vector<SparsityProfile> sparsity_profile(const std::vector<FeatureMap>& maps,
                                              int k_w, int k_h, int stride) {
  std::vector<SparsityProfile> profiles;
  profiles.reserve(maps.size());
  for (const FeatureMap& map : maps) {
    SparsityProfile p;
    p.raw = sparsity(map);
    const Matrix m = im2col(map, k_w, k_h, ConvConfig{stride});
    std::size_t zeros = 0;
    for (float v : m.values) {
      if (v == 0.0f) ++zeros;
    }
    p.extended = static_cast<double>(zeros) / static_cast<double>(m.values.size());
    profiles.push_back(p);
  }
  return profiles;
}

}  // namespace sconv
