// sparseconv: generate, convert, convolve, fuse, sweep, and profile sparse
// feature maps from the command line. See README.md for formats and schemas.

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sconv/dataset.hpp"
#include "sconv/ecr.hpp"
#include "sconv/errors.hpp"
#include "sconv/exec.hpp"
#include "sconv/metrics.hpp"
#include "sconv/pecr.hpp"
#include "sconv/report.hpp"
#include "sconv/tensor.hpp"

namespace fs = std::filesystem;
using namespace sconv;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start)
          .count());
}

int default_workers() {
  const char* v = std::getenv("SPARSECONV_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long parsed = std::strtol(v, &end, 10);
  if (*end != '\0' || parsed < 1) {
    throw ConfigError("SPARSECONV_WORKERS must be a positive integer, got '" +
                      std::string(v) + "'");
  }
  return static_cast<int>(parsed);
}

Filter filter_from_map(const FeatureMap& m) {
  return Filter(m.channels, m.height, m.width, m.values);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path.string());
  file << text;
  if (!file) throw IoError("write failed: " + path.string());
}

void warn_if_over_budget(const Grid& grid, const ExecConfig& exec) {
  if (grid.shared_bytes_per_block > exec.shared_memory_budget) {
    std::cerr << "warning: block needs " << grid.shared_bytes_per_block
              << " shared bytes, budget is " << exec.shared_memory_budget
              << "\n";
  }
}

// Validates the fused tiling on both axes, naming the offending one.
void check_pool_tiling(const LayerDims& d) {
  try {
    pecr_pack_count(d.in_w, d.k_w, d.stride, d.pool->width, d.pool->stride);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("width: ") + e.what());
  }
  try {
    pecr_pack_count(d.in_h, d.k_h, d.stride, d.pool->height, d.pool->stride);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("height: ") + e.what());
  }
}

struct GenArgs {
  int height = 0;
  int width = 0;
  int channels = 1;
  double sparsity = 0.5;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const FeatureMap map = generate(a.height, a.width, a.channels, a.sparsity, a.seed);
  save(map, a.out);
  std::size_t zeros = 0;
  for (float v : map.values) {
    if (v == 0.0f) ++zeros;
  }
  std::cout << "wrote " << a.out << ": " << map.channels << "x" << map.height
            << "x" << map.width << ", sparsity " << zeros << "/" << map.size()
            << " (" << format_double(sparsity(map)) << ")\n";
  return 0;
}

struct ConvArgs {
  std::string input;
  std::string kernel;
  int stride = 1;
  std::string method = "ecr";
  int workers = 0;  // 0: take the default
  std::uint64_t shared_budget = 49152;
  std::string report_path;
  std::string out_path;
};

int cmd_conv(const ConvArgs& a) {
  if (a.method != "dense" && a.method != "ecr") {
    throw ConfigError("conv method must be 'dense' or 'ecr', got '" + a.method + "'");
  }
  const FeatureMap map = load(a.input);
  const Filter filter = filter_from_map(load(a.kernel));
  const ConvConfig cfg{a.stride};
  const ExecConfig exec{a.workers > 0 ? a.workers : default_workers(),
                        a.shared_budget};

  LayerDims dims;
  dims.in_w = map.width;
  dims.in_h = map.height;
  dims.k_w = filter.width;
  dims.k_h = filter.height;
  dims.stride = a.stride;
  dims.channels = map.channels;
  const Grid grid = plan(dims, Format::kEcr);
  warn_if_over_budget(grid, exec);

  OpCount ops;
  const Clock::time_point start = Clock::now();
  FeatureMap out;
  if (a.method == "dense") {
    out = dense_conv(map, filter, cfg, &ops);
  } else {
    const EcrMap ecr = ecr_convert(map, filter, cfg, exec);
    out = ecr_spmv_conv(ecr, &ops, exec);
  }
  const std::uint64_t wall = elapsed_ns(start);

  RunReport report;
  report.command = "conv";
  report.method = a.method;
  report.dims = dims;
  report.workers = exec.workers;
  report.wall_ns = wall;
  report.ops = ops;
  report.traffic = traffic_conv_only(dims);
  report.grid = grid;
  report.output_checksum = checksum_hex(out.values);
  if (!a.report_path.empty()) write_text(a.report_path, run_report_to_json(report) + "\n");
  if (!a.out_path.empty()) save(out, a.out_path);

  std::cout << "conv method=" << a.method << " out=" << out.height << "x"
            << out.width << " muls=" << ops.multiplications
            << " adds=" << ops.additions << " grid=" << grid.blocks << "x"
            << grid.threads_per_block << " checksum=" << report.output_checksum
            << "\n";
  return 0;
}

struct ConvPoolArgs {
  std::string input;
  std::string kernel;
  int stride = 1;
  int pool_h = 2;
  int pool_w = 2;
  int pool_stride = 1;
  std::string pool_mode = "max";
  std::string method = "pecr";
  int workers = 0;
  std::uint64_t shared_budget = 49152;
  std::string report_path;
  std::string out_path;
};

int cmd_convpool(const ConvPoolArgs& a) {
  if (a.method != "dense-separate" && a.method != "pecr") {
    throw ConfigError("convpool method must be 'dense-separate' or 'pecr', got '" +
                      a.method + "'");
  }
  PoolConfig pool_cfg;
  pool_cfg.height = a.pool_h;
  pool_cfg.width = a.pool_w;
  pool_cfg.stride = a.pool_stride;
  if (a.pool_mode == "max") {
    pool_cfg.mode = PoolMode::kMax;
  } else if (a.pool_mode == "mean") {
    pool_cfg.mode = PoolMode::kMean;
  } else {
    throw ConfigError("pool mode must be 'max' or 'mean', got '" + a.pool_mode + "'");
  }

  const FeatureMap map = load(a.input);
  const Filter filter = filter_from_map(load(a.kernel));
  const ConvConfig cfg{a.stride};
  const ExecConfig exec{a.workers > 0 ? a.workers : default_workers(),
                        a.shared_budget};

  LayerDims dims;
  dims.in_w = map.width;
  dims.in_h = map.height;
  dims.k_w = filter.width;
  dims.k_h = filter.height;
  dims.stride = a.stride;
  dims.channels = map.channels;
  dims.pool = PoolDims{pool_cfg.width, pool_cfg.height, pool_cfg.stride};
  check_pool_tiling(dims);

  const Grid grid =
      plan(dims, a.method == "pecr" ? Format::kPecr : Format::kEcr);
  warn_if_over_budget(grid, exec);

  OpCount ops;
  const Clock::time_point start = Clock::now();
  FeatureMap out;
  if (a.method == "dense-separate") {
    out = pool(relu(dense_conv(map, filter, cfg, &ops)), pool_cfg);
  } else {
    const PecrMap pecr = pecr_convert(map, filter, cfg, pool_cfg, exec);
    out = pecr_conv_pool(pecr, &ops, exec);
  }
  const std::uint64_t wall = elapsed_ns(start);

  RunReport report;
  report.command = "convpool";
  report.method = a.method;
  report.dims = dims;
  report.workers = exec.workers;
  report.wall_ns = wall;
  report.ops = ops;
  report.traffic =
      a.method == "pecr" ? traffic_fused(dims) : traffic_separate(dims);
  report.grid = grid;
  report.output_checksum = checksum_hex(out.values);
  if (!a.report_path.empty()) write_text(a.report_path, run_report_to_json(report) + "\n");
  if (!a.out_path.empty()) save(out, a.out_path);

  std::cout << "convpool method=" << a.method << " out=" << out.height << "x"
            << out.width << " muls=" << ops.multiplications
            << " adds=" << ops.additions
            << " transfer_floats=" << report.traffic.transfer_bytes() / 4
            << " checksum=" << report.output_checksum << "\n";
  return 0;
}

struct SweepArgs {
  std::string config;
  std::string out;
  int workers = 0;
  std::uint64_t shared_budget = 49152;
};

int cmd_sweep(const SweepArgs& a) {
  std::ifstream file(a.config);
  if (!file) throw IoError("cannot open: " + a.config);
  json cfg;
  try {
    cfg = json::parse(file);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed sweep config: ") + e.what());
  }

  std::vector<int> sizes, kernels, strides, channel_counts;
  std::vector<double> sparsities;
  std::vector<std::string> methods;
  std::uint64_t seed = 1;
  std::optional<PoolConfig> pool;
  try {
    sizes = cfg.at("sizes").get<std::vector<int>>();
    kernels = cfg.at("kernels").get<std::vector<int>>();
    strides = cfg.at("strides").get<std::vector<int>>();
    sparsities = cfg.at("sparsities").get<std::vector<double>>();
    channel_counts = cfg.value("channels", std::vector<int>{1});
    methods = cfg.value("methods", std::vector<std::string>{"dense", "ecr"});
    seed = cfg.value("seed", std::uint64_t{1});
    if (cfg.contains("pool")) {
      PoolConfig p;
      p.height = cfg["pool"].at("h").get<int>();
      p.width = cfg["pool"].at("w").get<int>();
      p.stride = cfg["pool"].at("stride").get<int>();
      const std::string mode = cfg["pool"].value("mode", std::string("max"));
      if (mode != "max" && mode != "mean") {
        throw FormatError("pool mode must be 'max' or 'mean'");
      }
      p.mode = mode == "max" ? PoolMode::kMax : PoolMode::kMean;
      pool = p;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed sweep config: ") + e.what());
  }
  for (const std::string& m : methods) {
    if (m != "dense" && m != "ecr" && m != "pecr") {
      throw ConfigError("unknown sweep method '" + m + "'");
    }
    if (m == "pecr" && !pool) {
      throw ConfigError("sweep method 'pecr' requires a pool config");
    }
  }
  const bool run_dense = std::count(methods.begin(), methods.end(), "dense") > 0;
  const bool run_ecr = std::count(methods.begin(), methods.end(), "ecr") > 0;
  const bool run_pecr = std::count(methods.begin(), methods.end(), "pecr") > 0;
  const ExecConfig exec{a.workers > 0 ? a.workers : default_workers(),
                        a.shared_budget};

  std::string csv =
      "size,kernel,stride,channels,sparsity,seed,"
      "dense_ns,dense_muls,dense_adds,"
      "ecr_ns,ecr_muls,ecr_adds,ecr_mul_reduction_pct,ecr_add_reduction_pct,"
      "speedup_dense_over_ecr,"
      "pecr_ns,pecr_muls,pecr_adds,separate_transfer_floats,fused_transfer_floats\n";

  std::uint64_t point_index = 0;
  std::size_t rows = 0;
  for (int size : sizes) {
    for (int k : kernels) {
      for (int stride : strides) {
        for (double sp : sparsities) {
          for (int ch : channel_counts) {
            if (k > size) continue;  // kernel does not fit; skip the point
            const std::uint64_t map_seed = seed + point_index * 2;
            const std::uint64_t kernel_seed = seed + point_index * 2 + 1;
            ++point_index;

            const FeatureMap map = generate(size, size, ch, sp, map_seed);
            const Filter filter =
                filter_from_map(generate(k, k, ch, 0.0, kernel_seed));
            const ConvConfig cfg{stride};
            LayerDims dims;
            dims.in_w = dims.in_h = size;
            dims.k_w = dims.k_h = k;
            dims.stride = stride;
            dims.channels = ch;

            std::string dense_ns, dense_muls, dense_adds;
            std::string ecr_ns, ecr_muls, ecr_adds, mul_red, add_red, speedup;
            std::string pecr_ns, pecr_muls, pecr_adds, sep_floats, fus_floats;

            std::uint64_t dense_wall = 0;
            if (run_dense) {
              OpCount ops;
              const Clock::time_point t0 = Clock::now();
              dense_conv(map, filter, cfg, &ops);
              dense_wall = elapsed_ns(t0);
              dense_ns = std::to_string(dense_wall);
              dense_muls = std::to_string(ops.multiplications);
              dense_adds = std::to_string(ops.additions);
            }
            if (run_ecr) {
              OpCount ops;
              const Clock::time_point t0 = Clock::now();
              const EcrMap ecr = ecr_convert(map, filter, cfg, exec);
              ecr_spmv_conv(ecr, &ops, exec);
              const std::uint64_t wall = elapsed_ns(t0);
              ecr_ns = std::to_string(wall);
              ecr_muls = std::to_string(ops.multiplications);
              ecr_adds = std::to_string(ops.additions);
              const OpCount dense_ops{dense_mul_count(dims), dense_add_count(dims)};
              const ReductionReport red = reduction_report(dense_ops, ops);
              mul_red = format_double(red.multiplications_pct);
              add_red = format_double(red.additions_pct);
              if (run_dense && wall > 0) {
                speedup = format_double(static_cast<double>(dense_wall) /
                                        static_cast<double>(wall));
              }
            }
            if (run_pecr) {
              LayerDims pdims = dims;
              pdims.pool = PoolDims{pool->width, pool->height, pool->stride};
              bool valid = true;
              try {
                check_pool_tiling(pdims);
              } catch (const ConfigError&) {
                valid = false;  // tiling does not divide; leave cells blank
              }
              if (valid) {
                OpCount ops;
                const Clock::time_point t0 = Clock::now();
                const PecrMap pecr = pecr_convert(map, filter, cfg, *pool, exec);
                pecr_conv_pool(pecr, &ops, exec);
                const std::uint64_t wall = elapsed_ns(t0);
                pecr_ns = std::to_string(wall);
                pecr_muls = std::to_string(ops.multiplications);
                pecr_adds = std::to_string(ops.additions);
                sep_floats = std::to_string(traffic_separate(pdims).transfer_bytes() / 4);
                fus_floats = std::to_string(traffic_fused(pdims).transfer_bytes() / 4);
              }
            }

            csv += std::to_string(size) + "," + std::to_string(k) + "," +
                   std::to_string(stride) + "," + std::to_string(ch) + "," +
                   format_double(sp) + "," + std::to_string(map_seed) + "," +
                   dense_ns + "," + dense_muls + "," + dense_adds + "," +
                   ecr_ns + "," + ecr_muls + "," + ecr_adds + "," + mul_red +
                   "," + add_red + "," + speedup + "," + pecr_ns + "," +
                   pecr_muls + "," + pecr_adds + "," + sep_floats + "," +
                   fus_floats + "\n";
            ++rows;
          }
        }
      }
    }
  }
  write_text(a.out, csv);
  std::cout << "wrote " << a.out << ": " << rows << " rows\n";
  return 0;
}

struct AnalyzeArgs {
  std::string inputs;
  int kernel_size = 3;
  int stride = 1;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (!fs::is_directory(a.inputs)) {
    throw ConfigError("--inputs must be a directory: " + a.inputs);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.inputs)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".fmap" || p.extension() == ".csv") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("no .fmap or .csv files found in " + a.inputs);
  }

  std::string csv = "file,status,channels,height,width,raw_sparsity,im2col_sparsity,theta\n";
  std::size_t failures = 0;
  for (const fs::path& p : files) {
    try {
      const FeatureMap map = load(p);
      const auto profile = sparsity_profile({map}, a.kernel_size, a.kernel_size,
                                            a.stride).front();
      csv += p.filename().string() + ",ok," + std::to_string(map.channels) + "," +
             std::to_string(map.height) + "," + std::to_string(map.width) + "," +
             format_double(profile.raw) + "," + format_double(profile.extended) +
             "," + format_double(theta(profile.raw, map.width)) + "\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << p.string() << ": " << e.what() << "\n";
      csv += p.filename().string() + ",error,,,,,,\n";
      ++failures;
    }
  }
  write_text(a.out, csv);
  std::cout << "wrote " << a.out << ": " << files.size() - failures << " ok, "
            << failures << " failed\n";
  return failures == files.size() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-convolution engine: compressed-row formats, fused conv+pool, analytic models"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic sparse feature map");
  gen->add_option("--height", gen_args.height, "map height")->required();
  gen->add_option("--width", gen_args.width, "map width")->required();
  gen->add_option("--channels", gen_args.channels, "channel count")->capture_default_str();
  gen->add_option("--sparsity", gen_args.sparsity, "zero fraction in [0,1]")->capture_default_str();
  gen->add_option("--seed", gen_args.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_args.out, "output path (.fmap or .csv)")->required();

  ConvArgs conv_args;
  CLI::App* conv = app.add_subcommand("conv", "run one convolution layer");
  conv->add_option("--input", conv_args.input, "input feature map")->required();
  conv->add_option("--kernel", conv_args.kernel, "kernel file (same container format)")->required();
  conv->add_option("--stride", conv_args.stride, "convolution stride")->capture_default_str();
  conv->add_option("--method", conv_args.method, "dense | ecr")->capture_default_str();
  conv->add_option("--workers", conv_args.workers, "worker threads (default $SPARSECONV_WORKERS or 1)");
  conv->add_option("--shared-budget", conv_args.shared_budget, "shared memory budget in bytes")->capture_default_str();
  conv->add_option("--report", conv_args.report_path, "write a JSON run report here");
  conv->add_option("--out", conv_args.out_path, "write the output map here");

  ConvPoolArgs cp_args;
  CLI::App* convpool = app.add_subcommand("convpool", "run convolution + ReLU + pooling");
  convpool->add_option("--input", cp_args.input, "input feature map")->required();
  convpool->add_option("--kernel", cp_args.kernel, "kernel file")->required();
  convpool->add_option("--stride", cp_args.stride, "convolution stride")->capture_default_str();
  convpool->add_option("--pool-h", cp_args.pool_h, "pooling window height")->capture_default_str();
  convpool->add_option("--pool-w", cp_args.pool_w, "pooling window width")->capture_default_str();
  convpool->add_option("--pool-stride", cp_args.pool_stride, "pooling stride")->capture_default_str();
  convpool->add_option("--pool-mode", cp_args.pool_mode, "max | mean")->capture_default_str();
  convpool->add_option("--method", cp_args.method, "dense-separate | pecr")->capture_default_str();
  convpool->add_option("--workers", cp_args.workers, "worker threads");
  convpool->add_option("--shared-budget", cp_args.shared_budget, "shared memory budget in bytes")->capture_default_str();
  convpool->add_option("--report", cp_args.report_path, "write a JSON run report here");
  convpool->add_option("--out", cp_args.out_path, "write the pooled output here");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "run a benchmark grid from a JSON config");
  sweep->add_option("--config", sweep_args.config, "sweep config JSON")->required();
  sweep->add_option("--out", sweep_args.out, "output CSV")->required();
  sweep->add_option("--workers", sweep_args.workers, "worker threads");
  sweep->add_option("--shared-budget", sweep_args.shared_budget, "shared memory budget in bytes")->capture_default_str();

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "profile sparsity of stored feature maps");
  analyze->add_option("--inputs", analyze_args.inputs, "directory of .fmap/.csv files")->required();
  analyze->add_option("--kernel-size", analyze_args.kernel_size, "kernel size for the extension")->capture_default_str();
  analyze->add_option("--stride", analyze_args.stride, "stride for the extension")->capture_default_str();
  analyze->add_option("--out", analyze_args.out, "output CSV")->required();

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen(gen_args);
    if (conv->parsed()) return cmd_conv(conv_args);
    if (convpool->parsed()) return cmd_convpool(cp_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (analyze->parsed()) return cmd_analyze(analyze_args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
