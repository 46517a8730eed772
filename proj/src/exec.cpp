#include "sconv/exec.hpp"

#include "sconv/pecr.hpp"
#include "sconv/tensor.hpp"

namespace sconv {

Grid plan(const LayerDims& d, Format format) {
  if (format == Format::kEcr) {
    const OutputDims out = conv_output_dims(d.in_w, d.in_h, d.k_w, d.k_h, d.stride);
    const std::uint64_t slot =
        static_cast<std::uint64_t>(d.channels) * d.k_w * d.k_h;
    Grid grid;
    grid.blocks = out.height;
    grid.threads_per_block = out.width;
    // Per thread: slot floats of map data, slot floats of kernel data, one int.
    grid.shared_bytes_per_block =
        static_cast<std::uint64_t>(out.width) * (slot * 8 + 4);
    return grid;
  }

  if (!d.pool) throw ConfigError("PECR plan requires pool dims");
  const PoolDims& p = *d.pool;
  const int packs_w = pecr_pack_count(d.in_w, d.k_w, d.stride, p.width, p.stride);
  const int packs_h = pecr_pack_count(d.in_h, d.k_h, d.stride, p.height, p.stride);
  const std::uint64_t capacity = static_cast<std::uint64_t>(p.width) * p.height *
                                 d.channels * d.k_w * d.k_h;
  Grid grid;
  grid.blocks = packs_h;
  grid.threads_per_block = packs_w;
  // Per pack: data + index at worst-case capacity, plus one count per window.
  grid.shared_bytes_per_block =
      static_cast<std::uint64_t>(packs_w) *
      (capacity * 8 + static_cast<std::uint64_t>(p.width) * p.height * 4);
  return grid;
}

}  // namespace sconv
