#include <cmath>
#include <random>

#include "doctest.h"
#include "promptsim/preprocess.hpp"
#include "test_support.hpp"

using namespace promptsim;

namespace {

BinaryMask full(const Dims& d, const Spacing& s) {
  return BinaryMask(d, s, std::vector<std::uint8_t>(d.voxel_count(), 1));
}

VoxelGrid sequence_grid(int n) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = static_cast<float>(i + 1);
  return VoxelGrid({n, 1, 1}, {1, 1, 1}, DType::Float32, v);
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("identity resample at target spacing") {
    std::mt19937_64 gen(1);
    std::vector<float> v(60);
    for (auto& x : v) x = static_cast<float>(gen() % 1000);
    VoxelGrid g({3, 4, 5}, {1, 1, 1}, DType::Int16, v);
    CHECK(resample_isotropic(g, 1.0, Interpolation::Nearest) == g);
    CHECK(resample_isotropic(g, 1.0, Interpolation::Trilinear).data().size() == 60);
  }

  TEST_CASE("constant grid stays constant") {
    VoxelGrid g({5, 3, 7}, {0.3, 1.7, 0.9}, DType::Float32, std::vector<float>(105, 4.25f));
    for (double t : {0.5, 1.0, 2.2}) {
      const auto r = resample_isotropic(g, t, Interpolation::Trilinear);
      CHECK(r.spacing() == Spacing{t, t, t});
      for (float x : r.data()) CHECK(x == 4.25f);
    }
  }

  TEST_CASE("output dims round half up and stay positive") {
    VoxelGrid g({5, 3, 1}, {0.5, 0.5, 0.2}, DType::Float32);
    const auto r = resample_isotropic(g, 1.0, Interpolation::Nearest);
    CHECK(r.dims() == Dims{3, 2, 1});
    CHECK_THROWS_AS(resample_isotropic(g, 0.0, Interpolation::Nearest), InvalidArgument);
  }

  TEST_CASE("linear ramp is reproduced at the new voxel centres") {
    // value at voxel (i,j,k) = 3i - 2j + 0.5k + 1, a linear function of
    // position; trilinear interpolation must reproduce it exactly
    const Dims d{8, 4, 8};
    const Spacing s{0.5, 0.5, 0.75};
    VoxelGrid g(d, s);
    for (int k = 0; k < d.nz; ++k)
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i) g.at(i, j, k) = static_cast<float>(3 * i - 2 * j + 0.5 * k + 1);
    const auto r = resample_isotropic(g, 1.0, Interpolation::Trilinear);
    REQUIRE(r.dims() == Dims{4, 2, 6});
    for (int k = 0; k < 6; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 4; ++i) {
          // output centre in mm, converted to continuous input index
          const double xi = (i + 0.5) / s.x - 0.5, yj = (j + 0.5) / s.y - 0.5, zk = (k + 0.5) / s.z - 0.5;
          const double expected = 3 * xi - 2 * yj + 0.5 * zk + 1;
          CHECK(r.at(i, j, k) == doctest::Approx(expected).epsilon(1e-6));
        }
  }

  TEST_CASE("4^3 ramp along x at 0.5 mm to 1 mm") {
    VoxelGrid g({4, 4, 4}, {0.5, 0.5, 0.5});
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) g.at(i, j, k) = static_cast<float>(i);
    const auto r = resample_isotropic(g, 1.0, Interpolation::Trilinear);
    REQUIRE(r.dims() == Dims{2, 2, 2});
    CHECK(r.at(0, 1, 1) == 0.5f);
    CHECK(r.at(1, 0, 1) == 2.5f);
  }

  TEST_CASE("nearest resample keeps masks binary") {
    std::mt19937_64 gen(9);
    for (int n = 0; n < 10; ++n) {
      const auto m = testing::random_mask(gen, {7, 5, 6}, testing::random_spacing(gen), 0.5);
      const auto r = resample_isotropic(m.to_grid(), 0.8, Interpolation::Nearest);
      for (float x : r.data()) CHECK((x == 0.0f || x == 1.0f));
      CHECK_NOTHROW(resample_isotropic(m, 0.8));
    }
  }

  TEST_CASE("percentile oracle on 1..1000") {
    const auto g = sequence_grid(1000);
    const auto b = foreground_percentiles(g, full(g.dims(), g.spacing()), 0.5, 99.5);
    CHECK(b.lo == doctest::Approx(5.995).epsilon(1e-12));
    CHECK(b.hi == doctest::Approx(995.005).epsilon(1e-12));
    std::vector<double> v(1000);
    for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = i + 1;
    CHECK(percentile(v, 0.5) == testing::oracle_percentile(v, 0.5));
    CHECK(percentile(v, 100) == 1000);
    CHECK(percentile(v, 0) == 1);
    CHECK_THROWS_AS(percentile(v, 101), InvalidArgument);
  }

  TEST_CASE("clip uses foreground statistics only") {
    VoxelGrid g({4, 1, 1}, {1, 1, 1}, DType::Float32, {-100, 2, 3, 100});
    BinaryMask fg({4, 1, 1}, {1, 1, 1}, {0, 1, 1, 0});
    const auto c = clip_percentiles(g, fg, 0, 100);
    CHECK(c.at(0, 0, 0) == 2.0f);
    CHECK(c.at(3, 0, 0) == 3.0f);
    CHECK_THROWS_AS(clip_percentiles(g, BinaryMask({4, 1, 1}, {1, 1, 1})), EmptyMaskError);
    CHECK_THROWS_AS(clip_percentiles(g, BinaryMask({4, 1, 1}, {2, 1, 1})), GeometryMismatch);
  }

  TEST_CASE("constant grid is unchanged by clipping") {
    VoxelGrid g({3, 3, 3}, {1, 1, 1}, DType::Int16, std::vector<float>(27, 12.0f));
    CHECK(clip_percentiles(g, full(g.dims(), g.spacing())) == g);
  }

  TEST_CASE("clip is idempotent when percentile ranks are integral") {
    std::mt19937_64 gen(4);
    std::normal_distribution<float> nd(0, 10);
    for (int t = 0; t < 20; ++t) {
      // 101 foreground values: ranks 0.01 * 100 = 1 and 0.99 * 100 = 99
      std::vector<float> v(101);
      for (auto& x : v) x = nd(gen);
      VoxelGrid g({101, 1, 1}, {1, 1, 1}, DType::Float32, v);
      const auto fg = full(g.dims(), g.spacing());
      const auto once = clip_percentiles(g, fg, 1, 99);
      CHECK(clip_percentiles(once, fg, 1, 99) == once);
    }
  }

  TEST_CASE("clip is not idempotent with interpolated ranks") {
    // 1..1000 at 0.5/99.5: the first clip turns 1..5 into 5.995, which moves
    // the interpolated low percentile of the second pass
    const auto g = sequence_grid(1000);
    const auto fg = full(g.dims(), g.spacing());
    const auto once = clip_percentiles(g, fg);
    const auto b2 = foreground_percentiles(once, fg, 0.5, 99.5);
    std::vector<double> v(once.data().begin(), once.data().end());
    CHECK(b2.lo == testing::oracle_percentile(v, 0.5));
    CHECK(b2.lo > static_cast<double>(once.at(0, 0, 0)));
  }

  TEST_CASE("clip is order preserving") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<float> u(-5, 5);
    std::vector<float> v(200);
    for (auto& x : v) x = u(gen);
    VoxelGrid g({200, 1, 1}, {1, 1, 1}, DType::Float32, v);
    const auto c = clip_percentiles(g, full(g.dims(), g.spacing()), 10, 90);
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = 0; b < v.size(); ++b)
        if (v[a] <= v[b]) CHECK(c.data()[a] <= c.data()[b]);
  }

  TEST_CASE("zscore hand examples") {
    VoxelGrid a({2, 1, 1}, {1, 1, 1}, DType::Float32, {-1, 1});
    const auto fa = full(a.dims(), a.spacing());
    CHECK(zscore_normalize(a, fa) == a);
    VoxelGrid b({3, 1, 1}, {1, 1, 1}, DType::Float32, {2, 4, 5});
    BinaryMask fb({3, 1, 1}, {1, 1, 1}, {1, 1, 0});
    const auto z = zscore_normalize(b, fb);
    CHECK(z.at(0, 0, 0) == -1.0f);
    CHECK(z.at(1, 0, 0) == 1.0f);
    CHECK(z.at(2, 0, 0) == 2.0f);
  }

  TEST_CASE("zscore errors") {
    VoxelGrid g({2, 1, 1}, {1, 1, 1}, DType::Float32, {3, 3});
    CHECK_THROWS_AS(zscore_normalize(g, full(g.dims(), g.spacing())), InvalidArgument);
    BinaryMask one({2, 1, 1}, {1, 1, 1}, {1, 0});
    CHECK_THROWS_AS(zscore_normalize(g, one), EmptyMaskError);
  }

  TEST_CASE("zscore foreground has mean 0 and population sd 1") {
    std::mt19937_64 gen(31);
    std::normal_distribution<float> nd(50, 20);
    for (int t = 0; t < 50; ++t) {
      VoxelGrid g({6, 6, 6}, {1, 1, 1});
      for (auto& x : g.data()) x = nd(gen);
      const auto fg = testing::random_mask(gen, g.dims(), g.spacing(), 0.5);
      if (fg.count() < 2) continue;
      const auto z = zscore_normalize(g, fg);
      double sum = 0, sq = 0;
      const double n = static_cast<double>(fg.count());
      for (std::size_t q = 0; q < z.size(); ++q)
        if (fg.data()[q]) sum += z.data()[q];
      const double mean = sum / n;
      for (std::size_t q = 0; q < z.size(); ++q)
        if (fg.data()[q]) sq += (z.data()[q] - mean) * (z.data()[q] - mean);
      CHECK(std::abs(mean) < 1e-5);
      CHECK(std::abs(std::sqrt(sq / n) - 1.0) < 1e-5);
    }
  }

  TEST_CASE("default foreground is strictly positive intensity") {
    VoxelGrid g({3, 1, 1}, {1, 1, 1}, DType::Float32, {-1, 0, 0.1f});
    const auto m = foreground_by_intensity(g);
    CHECK(m.count() == 1);
    CHECK(m.at(2, 0, 0));
  }
}
