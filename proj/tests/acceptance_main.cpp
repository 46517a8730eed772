// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "oracle.hpp"
#include "sconv/dataset.hpp"
#include "sconv/ecr.hpp"
#include "sconv/errors.hpp"
#include "sconv/metrics.hpp"
#include "sconv/pecr.hpp"
#include "sconv/pipeline.hpp"
#include "sconv/report.hpp"

using namespace sconv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct CriterionLine {
  int num;
  std::string text;
};
std::vector<CriterionLine> g_lines;

void report(int num, const char* name, bool pass, const std::string& detail) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s  %2d. %s%s%s", pass ? "PASS" : "FAIL", num,
                name, detail.empty() ? "" : ": ", detail.c_str());
  g_lines.push_back({num, buf});
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SweepPoint {
  int size;
  int k;
  int stride;
  int channels;
  double sparsity;
  std::uint64_t map_seed;
  std::uint64_t kernel_seed;
};

std::vector<SweepPoint> build_sweep(std::size_t count) {
  Rng rng(20250801);
  const double sparsities[] = {0.0, 0.5, 0.7, 0.9, 1.0};
  std::vector<SweepPoint> points;
  while (points.size() < count) {
    SweepPoint p;
    p.size = 5 + static_cast<int>(rng.next_below(60));  // 5..64
    p.k = rng.next_below(2) == 0 ? 3 : 5;
    if (p.k > p.size) continue;
    p.stride = 1 + static_cast<int>(rng.next_below(3));
    p.channels = rng.next_below(2) == 0 ? 1 : 3;
    p.sparsity = sparsities[rng.next_below(5)];
    p.map_seed = rng.next();
    p.kernel_seed = rng.next();
    points.push_back(p);
  }
  return points;
}

Filter point_filter(const SweepPoint& p, bool mixed_sign) {
  FeatureMap w = generate(p.k, p.k, p.channels, 0.0, p.kernel_seed);
  if (mixed_sign) {
    for (float& v : w.values) v -= 0.5f;
  }
  return Filter(p.channels, p.k, p.k, w.values);
}

bool pool_tiling_valid(int size, int k, int stride, int pool, int pool_stride) {
  try {
    pecr_pack_count(size, k, stride, pool, pool_stride);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

// Independent validity check: conv output must tile exactly and admit at
// least one pooling window.
bool pool_tiling_valid_brute(int size, int k, int stride, int pool,
                             int pool_stride) {
  if ((size - k) % stride != 0) return false;
  const int conv_extent = (size - k) / stride + 1;
  if (conv_extent < pool) return false;
  return (conv_extent - pool) % pool_stride == 0;
}

std::string run_cli(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      std::string(SPARSECONV_BIN) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("cli failed: " + args);
  }
  std::ifstream f(out);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

NetworkSpec four_layer_network(Rng& rng) {
  auto filters = [&](int count, int channels, int k) {
    std::vector<Filter> out;
    for (int i = 0; i < count; ++i) {
      FeatureMap w = generate(k, k, channels, 0.0, rng.next());
      for (float& v : w.values) v -= 0.5f;
      out.emplace_back(channels, k, k, w.values);
    }
    return out;
  };
  NetworkSpec net;
  net.in_channels = 3;
  net.in_height = 20;
  net.in_width = 20;
  {
    LayerSpec l;
    l.kind = LayerKind::kConvPool;
    l.filters = filters(4, 3, 3);
    l.conv = {1};
    l.pool = PoolConfig{2, 2, 2, PoolMode::kMax};
    l.activation = Activation::kRelu;
    net.layers.push_back(l);  // 3x20x20 -> 4x9x9
  }
  {
    LayerSpec l;
    l.kind = LayerKind::kConv;
    l.filters = filters(2, 4, 3);
    l.conv = {1};
    l.activation = Activation::kRelu;
    net.layers.push_back(l);  // -> 2x7x7
  }
  {
    LayerSpec l;
    l.kind = LayerKind::kConvPool;
    l.filters = filters(3, 2, 2);
    l.conv = {1};
    l.pool = PoolConfig{2, 2, 2, PoolMode::kMax};
    l.activation = Activation::kRelu;
    net.layers.push_back(l);  // -> 3x3x3
  }
  {
    LayerSpec l;
    l.kind = LayerKind::kConv;
    l.filters = filters(1, 3, 3);
    l.conv = {1};
    l.activation = Activation::kNone;
    net.layers.push_back(l);  // -> 1x1x1
  }
  return net;
}

void criterion_1_and_3_and_4(const std::vector<SweepPoint>& sweep) {
  const Clock::time_point start = Clock::now();
  bool equal_ok = true, bitexact_ok = true, counters_ok = true, law_ok = true;
  double worst_diff = 0.0;
  std::string detail1, detail3, detail4;

  for (const SweepPoint& p : sweep) {
    const FeatureMap map =
        generate(p.size, p.size, p.channels, p.sparsity, p.map_seed);
    const Filter filter = point_filter(p, false);
    const ConvConfig cfg{p.stride};

    OpCount dense_ops;
    const FeatureMap dense_out = dense_conv(map, filter, cfg, &dense_ops);
    OpCount sparse_ops;
    const FeatureMap sparse_out =
        ecr_spmv_conv(ecr_convert(map, filter, cfg), &sparse_ops);

    const double diff = refimpl::max_abs_diff(sparse_out.values, dense_out.values);
    worst_diff = std::max(worst_diff, diff);
    if (diff > 1e-5) equal_ok = false;
    // Non-negative maps and kernels: skipping zero terms must be bit-exact.
    if (!refimpl::bitwise_equal(sparse_out.values, dense_out.values)) {
      bitexact_ok = false;
    }

    LayerDims dims;
    dims.in_w = dims.in_h = p.size;
    dims.k_w = dims.k_h = p.k;
    dims.stride = p.stride;
    dims.channels = p.channels;
    if (dense_ops.multiplications != dense_mul_count(dims) ||
        dense_ops.additions != dense_add_count(dims)) {
      counters_ok = false;
      detail3 = "mismatch at size " + std::to_string(p.size);
    }

    std::uint64_t oracle_muls = 0;
    for (int n : refimpl::window_nnz(map, p.k, p.k, p.stride)) oracle_muls += n;
    if (sparse_ops.multiplications != oracle_muls) {
      law_ok = false;
      detail4 = "counter mismatch at size " + std::to_string(p.size);
    }
  }

  // Mixed-sign kernels: tolerance path only.
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    SweepPoint p = sweep[i * 7 % sweep.size()];
    p.kernel_seed = rng.next();
    const FeatureMap map =
        generate(p.size, p.size, p.channels, p.sparsity, p.map_seed);
    const Filter filter = point_filter(p, true);
    const FeatureMap dense_out = dense_conv(map, filter, {p.stride});
    const FeatureMap sparse_out =
        ecr_spmv_conv(ecr_convert(map, filter, {p.stride}));
    const double diff = refimpl::max_abs_diff(sparse_out.values, dense_out.values);
    worst_diff = std::max(worst_diff, diff);
    if (diff > 1e-5) equal_ok = false;
  }

  const double elapsed = seconds_since(start);
  const bool in_time = elapsed < 60.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu points, max |diff| %.2e, %.1fs",
                sweep.size() + 20, worst_diff, elapsed);
  report(1, "ECR oracle equivalence (<= 1e-5, bit-exact on non-negative)",
         equal_ok && bitexact_ok && in_time, buf);
  report(3, "dense counters equal the closed-form counts", counters_ok, detail3);

  // Size-64 reduction ratios.
  bool ratio_ok = true;
  std::string ratio_detail;
  for (double sp : {0.0, 0.5, 0.7, 0.9, 1.0}) {
    const FeatureMap map = generate(64, 64, 1, sp, 12345);
    const Filter filter(1, 3, 3, std::vector<float>(9, 1.0f));
    OpCount ops;
    ecr_spmv_conv(ecr_convert(map, filter, {1}), &ops);
    LayerDims dims;
    dims.in_w = dims.in_h = 64;
    dims.k_w = dims.k_h = 3;
    dims.stride = 1;
    const double ratio = static_cast<double>(ops.multiplications) /
                         static_cast<double>(dense_mul_count(dims));
    if (std::fabs(ratio - (1.0 - sp)) > 0.05) {
      ratio_ok = false;
      char rbuf[96];
      std::snprintf(rbuf, sizeof(rbuf), "ratio %.3f at sparsity %.1f", ratio, sp);
      ratio_detail = rbuf;
    }
  }
  report(4, "sparse multiplications equal the window-nnz oracle; ratio tracks 1-s",
         law_ok && ratio_ok, law_ok ? ratio_detail : detail4);
}

void criterion_2(const std::vector<SweepPoint>& sweep) {
  bool ok = true;
  int valid_points = 0;
  double worst = 0.0;
  std::string detail;
  for (const SweepPoint& p : sweep) {
    for (int ps : {1, 2}) {
      if (!pool_tiling_valid(p.size, p.k, p.stride, 2, ps)) continue;
      ++valid_points;
      const PoolConfig pool{2, 2, ps, PoolMode::kMax};
      const FeatureMap map =
          generate(p.size, p.size, p.channels, p.sparsity, p.map_seed);
      const Filter filter = point_filter(p, true);
      const FeatureMap fused =
          pecr_conv_pool(pecr_convert(map, filter, {p.stride}, pool));
      const FeatureMap expect = refimpl::max_pool(
          refimpl::relu(refimpl::conv(map, filter, p.stride)), 2, 2, ps);
      const double diff = refimpl::max_abs_diff(fused.values, expect.values);
      worst = std::max(worst, diff);
      if (diff > 1e-5) {
        ok = false;
        detail = "diff " + std::to_string(diff) + " at size " + std::to_string(p.size);
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d tiling-valid points, max |diff| %.2e",
                valid_points, worst);
  report(2, "PECR fusion equals pool(relu(conv)) (<= 1e-5)",
         ok && valid_points >= 20, detail.empty() ? buf : detail.c_str());
}

void criterion_5() {
  const ReductionReport r = reduction_report({27, 24}, {10, 7});
  const bool ok = std::llround(r.multiplications_pct) == 63 &&
                  std::fabs(r.additions_pct - 70.8) <= 0.05;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "muls %.1f%%, adds %.1f%%",
                r.multiplications_pct, r.additions_pct);
  report(5, "reduction report reproduces 63% / 70.8%", ok, buf);
}

void criterion_6(const std::vector<SweepPoint>& sweep) {
  bool ok = true;
  std::string detail;
  int checks = 0;
  for (const SweepPoint& p : sweep) {
    for (int ps : {1, 2}) {
      const bool valid = pool_tiling_valid(p.size, p.k, p.stride, 2, ps);
      const bool valid_brute = pool_tiling_valid_brute(p.size, p.k, p.stride, 2, ps);
      if (valid != valid_brute) {
        ok = false;
        detail = "validity disagreement at size " + std::to_string(p.size);
        continue;
      }
      if (!valid) continue;
      ++checks;
      const int packs = pecr_pack_count(p.size, p.k, p.stride, 2, ps);
      const int conv_extent = refimpl::window_count(p.size, p.k, p.stride);
      const int brute = refimpl::window_count(conv_extent, 2, ps);
      if (packs != brute) {
        ok = false;
        detail = "pack count " + std::to_string(packs) + " != " +
                 std::to_string(brute) + " at size " + std::to_string(p.size);
      }
    }
  }
  report(6, "pack counts equal brute-force window enumeration; invalid configs rejected",
         ok && checks > 0, detail.empty() ? std::to_string(checks) + " valid configs" : detail);
}

void criterion_7(const std::vector<SweepPoint>& sweep) {
  bool ok = true;
  std::string detail;
  for (const SweepPoint& p : sweep) {
    for (int ps : {1, 2}) {
      if (!pool_tiling_valid(p.size, p.k, p.stride, 2, ps)) continue;
      LayerDims dims;
      dims.in_w = dims.in_h = p.size;
      dims.k_w = dims.k_h = p.k;
      dims.stride = p.stride;
      dims.channels = p.channels;
      dims.pool = PoolDims{2, 2, ps};
      if (traffic_fused(dims).transfer_bytes() >=
          traffic_separate(dims).transfer_bytes()) {
        ok = false;
        detail = "no saving at size " + std::to_string(p.size);
      }
    }
  }
  LayerDims example;
  example.in_w = example.in_h = 5;
  example.k_w = example.k_h = 3;
  example.stride = 1;
  example.pool = PoolDims{2, 2, 1};
  const std::uint64_t sep = traffic_separate(example).transfer_bytes() / 4;
  const std::uint64_t fus = traffic_fused(example).transfer_bytes() / 4;
  if (sep != 56 || fus != 38) {
    ok = false;
    detail = "example gave " + std::to_string(fus) + " vs " + std::to_string(sep);
  }
  report(7, "fused transfers < separate transfers; example is 38 vs 56 floats", ok,
         detail.empty() ? "38 vs 56" : detail);
}

void criterion_8() {
  bool ok = true;
  std::string detail;
  const fs::path dir =
      fs::temp_directory_path() / ("sconv_acc_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  try {
    const fs::path input = dir / "in.fmap";
    const fs::path kernel = dir / "k.fmap";
    save_fmap(generate(32, 32, 3, 0.7, 7), input);
    save_fmap(generate(3, 3, 3, 0.0, 8), kernel);

    auto checksum_and_ops = [&](const std::string& args, const fs::path& report_path) {
      run_cli(dir, args + " --report " + report_path.string());
      const RunReport r = run_report_from_json(read_file(report_path));
      return std::pair(r.output_checksum, r.ops);
    };

    const std::string conv_base =
        "conv --input " + input.string() + " --kernel " + kernel.string() + " --method ecr";
    const auto [conv_sum_1, conv_ops_1] =
        checksum_and_ops(conv_base + " --workers 1", dir / "c1.json");
    const auto [conv_sum_8, conv_ops_8] =
        checksum_and_ops(conv_base + " --workers 8", dir / "c8.json");
    if (conv_sum_1 != conv_sum_8 || !(conv_ops_1 == conv_ops_8)) {
      ok = false;
      detail = "conv checksums/op counts differ across workers";
    }

    const std::string cp_base = "convpool --input " + input.string() + " --kernel " +
                                kernel.string() + " --pool-stride 2 --method pecr";
    const auto [cp_sum_1, cp_ops_1] =
        checksum_and_ops(cp_base + " --workers 1", dir / "p1.json");
    const auto [cp_sum_8, cp_ops_8] =
        checksum_and_ops(cp_base + " --workers 8", dir / "p8.json");
    if (cp_sum_1 != cp_sum_8 || !(cp_ops_1 == cp_ops_8)) {
      ok = false;
      detail = "convpool checksums/op counts differ across workers";
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  report(8, "CLI outputs identical for --workers 1 and --workers 8", ok, detail);
}

void criterion_9() {
  bool ok = true;
  std::string detail;

  const FeatureMap zeros(3, 16, 16);
  const Filter filter = [] {
    const FeatureMap w = generate(3, 3, 3, 0.0, 99);
    return Filter(3, 3, 3, w.values);
  }();

  const EcrMap ecr = ecr_convert(zeros, filter, {1});
  for (const EcrBlockRow& row : ecr.block_rows) {
    for (int p : row.ptr) {
      if (p != -1) {
        ok = false;
        detail = "non-sentinel ptr on an all-zero map";
      }
    }
  }
  OpCount ecr_ops;
  const FeatureMap ecr_out = ecr_spmv_conv(ecr, &ecr_ops);
  for (float v : ecr_out.values) {
    if (v != 0.0f) ok = false;
  }
  if (ecr_ops.multiplications != 0) {
    ok = false;
    detail = "ECR multiplications on an all-zero map";
  }

  const PoolConfig pool{2, 2, 2, PoolMode::kMax};
  const PecrMap pecr = pecr_convert(zeros, filter, {1}, pool);
  OpCount pecr_ops;
  const FeatureMap pecr_out = pecr_conv_pool(pecr, &pecr_ops);
  for (const auto& row : pecr.pool_rows) {
    for (const PecrPoolPack& pack : row) {
      if (!pack.data.empty()) ok = false;
      for (int c : pack.count) {
        if (c != 0) ok = false;
      }
    }
  }
  for (float v : pecr_out.values) {
    if (v != 0.0f) ok = false;
  }
  if (pecr_ops.multiplications != 0) {
    ok = false;
    detail = "PECR multiplications on an all-zero map";
  }
  report(9, "all-zero input: sentinels everywhere, zero work, zero output", ok, detail);
}

void criterion_10() {
  const Clock::time_point start = Clock::now();
  bool ok = true;
  std::string detail;
  try {
    Rng rng(424242);
    const NetworkSpec net = four_layer_network(rng);
    const FeatureMap input = generate(20, 20, 3, 0.5, rng.next());

    const ForwardResult dense = forward(net, input, Method::kDense);
    const ForwardResult ecr = forward(net, input, Method::kEcr);
    const ForwardResult pecr = forward(net, input, Method::kPecr);

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const double d1 = refimpl::max_abs_diff(dense.layer_outputs[l].values,
                                              ecr.layer_outputs[l].values);
      const double d2 = refimpl::max_abs_diff(dense.layer_outputs[l].values,
                                              pecr.layer_outputs[l].values);
      if (d1 > 1e-5 || d2 > 1e-5) {
        ok = false;
        detail = "layer " + std::to_string(l) + " diverges";
      }
      // ReLU only creates zeros.
      if (sparsity(relu(dense.conv_outputs[l])) <
          sparsity(dense.conv_outputs[l])) {
        ok = false;
        detail = "ReLU lowered sparsity at layer " + std::to_string(l);
      }
    }
    if (pecr.pecr_fallback_layers != std::vector<int>{1, 3}) {
      ok = false;
      detail = "unexpected fused/fallback split";
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 30.0) {
    ok = false;
    detail = "took " + std::to_string(elapsed) + "s";
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "4 layers x 3 methods, %.1fs", elapsed);
  report(10, "four-layer network agrees across methods per layer", ok,
         detail.empty() ? buf : detail.c_str());
}

void criterion_11(const std::vector<SweepPoint>& sweep) {
  bool ok = true;
  std::string detail;

  // FMAP round trip, including awkward encodings.
  const fs::path dir =
      fs::temp_directory_path() / ("sconv_rt_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  try {
    FeatureMap map = generate(17, 13, 2, 0.5, 31);
    map.values[0] = -0.0f;
    map.values[1] = 1e-41f;
    map.values[2] = -3.5f;
    save_fmap(map, dir / "rt.fmap");
    const FeatureMap loaded = load_fmap(dir / "rt.fmap");
    if (!refimpl::bitwise_equal(loaded.values, map.values)) {
      ok = false;
      detail = "FMAP round trip not bit-exact";
    }
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);

  // Window reconstruction across the sweep.
  auto dense_window = [](const FeatureMap& map, int k, int y0, int x0) {
    std::vector<float> window;
    for (int c = 0; c < map.channels; ++c) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          window.push_back(map.at(c, y0 + i, x0 + j));
        }
      }
    }
    return window;
  };
  for (std::size_t idx = 0; idx < sweep.size() && ok; idx += 3) {
    const SweepPoint& p = sweep[idx];
    const FeatureMap map =
        generate(p.size, p.size, p.channels, p.sparsity, p.map_seed);
    const Filter filter = point_filter(p, false);

    const EcrMap ecr = ecr_convert(map, filter, {p.stride});
    for (int b = 0; b < ecr.dims.out_h() && ok; ++b) {
      for (int t = 0; t < ecr.dims.out_w(); ++t) {
        if (ecr_window(ecr, b, t) !=
            dense_window(map, p.k, b * p.stride, t * p.stride)) {
          ok = false;
          detail = "ECR window mismatch at size " + std::to_string(p.size);
          break;
        }
      }
    }

    for (int ps : {1, 2}) {
      if (!pool_tiling_valid(p.size, p.k, p.stride, 2, ps) || !ok) continue;
      const PecrMap pecr =
          pecr_convert(map, filter, {p.stride}, PoolConfig{2, 2, ps, PoolMode::kMax});
      for (int b = 0; b < pecr.packs_h() && ok; ++b) {
        for (int t = 0; t < pecr.packs_w() && ok; ++t) {
          for (int n = 0; n < pecr.dims.windows_per_pack(); ++n) {
            const int wy = b * p.stride * ps + (n / 2) * p.stride;
            const int wx = t * p.stride * ps + (n % 2) * p.stride;
            if (pecr_window(pecr, b, t, n) != dense_window(map, p.k, wy, wx)) {
              ok = false;
              detail = "PECR window mismatch at size " + std::to_string(p.size);
              break;
            }
          }
        }
      }
    }
  }
  report(11, "formats round-trip: FMAP bit-exact, windows reconstruct exactly", ok, detail);
}

}  // namespace

int main() {
  const std::vector<SweepPoint> sweep = build_sweep(220);
  std::printf("acceptance sweep: %zu randomized points\n", sweep.size());

  criterion_1_and_3_and_4(sweep);
  criterion_2(sweep);
  criterion_5();
  criterion_6(sweep);
  criterion_7(sweep);
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11(sweep);

  std::sort(g_lines.begin(), g_lines.end(),
            [](const CriterionLine& a, const CriterionLine& b) { return a.num < b.num; });
  for (const CriterionLine& line : g_lines) std::printf("%s\n", line.text.c_str());

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
