#include <cmath>
#include <doctest.h>

#include "sconv/errors.hpp"
#include "sconv/metrics.hpp"

using namespace sconv;

namespace {

LayerDims conv_dims(int size, int k, int stride, int channels = 1) {
  LayerDims d;
  d.in_w = d.in_h = size;
  d.k_w = d.k_h = k;
  d.stride = stride;
  d.channels = channels;
  return d;
}

}  // namespace

TEST_CASE("closed-form op counts") {
  CHECK(dense_mul_count(conv_dims(5, 3, 1)) == 81);
  CHECK(dense_add_count(conv_dims(5, 3, 1)) == 72);
  CHECK(dense_mul_count(conv_dims(3, 3, 1)) == 9);
  CHECK(dense_add_count(conv_dims(3, 3, 1)) == 8);
  CHECK(dense_mul_count(conv_dims(11, 3, 2)) == 225);
  CHECK(dense_add_count(conv_dims(11, 3, 2)) == 200);
  CHECK(dense_mul_count(conv_dims(5, 3, 1, 3)) == 243);
  CHECK_THROWS_AS(dense_mul_count(conv_dims(3, 5, 1)), ShapeError);
}

TEST_CASE("theta") {
  CHECK(theta(0.9, 14) == doctest::Approx(6.4286).epsilon(1e-4));
  CHECK(theta(0.0, 100) == 0.0);
  CHECK(theta(1.0, 100) == 1.0);
  CHECK_THROWS_AS(theta(0.5, 0), ConfigError);

  SUBCASE("monotone in sparsity, antitone in width") {
    double prev = -1.0;
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double t = theta(s, 14);
      CHECK(t >= prev);
      prev = t;
    }
    prev = 1e9;
    for (int w : {2, 7, 14, 56, 224}) {
      const double t = theta(0.9, w);
      CHECK(t <= prev);
      prev = t;
    }
  }
}

TEST_CASE("traffic model") {
  LayerDims d = conv_dims(5, 3, 1);
  d.pool = PoolDims{2, 2, 1};

  SUBCASE("5x5 map, 3x3 kernel, 2x2 pool, strides 1") {
    const TrafficReport sep = traffic_separate(d);
    const TrafficReport fus = traffic_fused(d);
    CHECK(sep.transfer_bytes() / 4 == 56);
    CHECK(fus.transfer_bytes() / 4 == 38);
    CHECK(fus.device_to_host_bytes < sep.device_to_host_bytes);
    CHECK(fus.total_bytes() < sep.total_bytes());
  }
  SUBCASE("1x1 pool: fusing saves exactly two conv outputs worth of floats") {
    LayerDims d1 = conv_dims(7, 3, 1);
    d1.pool = PoolDims{1, 1, 1};
    const std::uint64_t conv_floats = 5 * 5;
    CHECK(traffic_separate(d1).transfer_bytes() - traffic_fused(d1).transfer_bytes() ==
          2 * conv_floats * 4);
  }
  SUBCASE("fused beats separate on every field across a sweep") {
    for (int size : {5, 8, 12, 33}) {
      for (int k : {1, 3, 5}) {
        for (int channels : {1, 3}) {
          for (int out_channels : {1, 4}) {
            LayerDims dims = conv_dims(size, k, 1, channels);
            dims.out_channels = out_channels;
            dims.pool = PoolDims{2, 2, 2};
            if (size - k + 1 < 2) continue;
            const TrafficReport sep = traffic_separate(dims);
            const TrafficReport fus = traffic_fused(dims);
            CHECK(fus.host_to_device_bytes <= sep.host_to_device_bytes);
            CHECK(fus.device_to_host_bytes <= sep.device_to_host_bytes);
            CHECK(fus.global_loads_bytes <= sep.global_loads_bytes);
            CHECK(fus.global_stores_bytes <= sep.global_stores_bytes);
            CHECK(fus.transfer_bytes() < sep.transfer_bytes());
          }
        }
      }
    }
  }
  SUBCASE("pool dims are required") {
    CHECK_THROWS_AS(traffic_separate(conv_dims(5, 3, 1)), ConfigError);
    CHECK_THROWS_AS(traffic_fused(conv_dims(5, 3, 1)), ConfigError);
  }
}

TEST_CASE("reduction report") {
  SUBCASE("quoted example rounds to 63% / 70.8%") {
    const ReductionReport r = reduction_report({27, 24}, {10, 7});
    CHECK(std::round(r.multiplications_pct) == 63.0);
    CHECK(r.additions_pct == doctest::Approx(70.8).epsilon(1e-3));
  }
  SUBCASE("identical counts reduce nothing") {
    const ReductionReport r = reduction_report({100, 50}, {100, 50});
    CHECK(r.multiplications_pct == 0.0);
    CHECK(r.additions_pct == 0.0);
  }
  SUBCASE("empty sparse counts reduce everything") {
    const ReductionReport r = reduction_report({100, 50}, {0, 0});
    CHECK(r.multiplications_pct == 100.0);
    CHECK(r.additions_pct == 100.0);
  }
  CHECK_THROWS_AS(reduction_report({0, 0}, {1, 1}), ConfigError);
}

TEST_CASE("op count merge is commutative with zero identity") {
  const OpCount a{3, 5};
  const OpCount b{11, 2};
  OpCount ab = a;
  ab.merge(b);
  OpCount ba = b;
  ba.merge(a);
  CHECK(ab == ba);
  CHECK(ab == OpCount{14, 7});
  OpCount with_zero = a;
  with_zero.merge(OpCount{});
  CHECK(with_zero == a);
}
