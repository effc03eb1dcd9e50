#include <cmath>
#include <random>

#include "doctest.h"
#include "promptsim/components.hpp"
#include "promptsim/morph.hpp"
#include "test_support.hpp"

using namespace promptsim;

namespace {

Binary2D from_rows(const std::vector<std::string>& rows) {
  Binary2D img(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#';
  return img;
}

Binary2D random_blob_2d(std::mt19937_64& gen, int w, int h, double noise = 0.05) {
  Binary2D img(w, h);
  std::uniform_real_distribution<double> u(0, 1);
  const int discs = 1 + static_cast<int>(gen() % 4);
  for (int d = 0; d < discs; ++d) {
    const double cx = u(gen) * w, cy = u(gen) * h, r = 1 + u(gen) * 0.3 * std::min(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.at(x, y) = 1;
  }
  for (auto& p : img.pixels)
    if (u(gen) < noise) p = static_cast<std::uint8_t>(1 - p);
  return img;
}

// A background component (4-connected) that does not touch the border.
bool has_hole(const Binary2D& img) {
  Binary2D bg(img.width, img.height);
  for (std::size_t n = 0; n < img.pixels.size(); ++n) bg.pixels[n] = !img.pixels[n];
  const auto cc = connected_components_2d(bg, Connectivity2D::Four);
  std::vector<bool> open(cc.component_count() + 1, false);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (x == 0 || y == 0 || x == img.width - 1 || y == img.height - 1)
        open[static_cast<std::size_t>(cc.labels[bg.index(x, y)])] = true;
  for (std::size_t l = 1; l < open.size(); ++l)
    if (!open[l]) return true;
  return false;
}

double total(const Scalar2D& s) {
  double t = 0;
  for (double v : s.pixels) t += v;
  return t;
}

}  // namespace

TEST_SUITE("morph") {
  // Expected skeletons from tests/oracles/zhang_suen_ref.py (textbook
  // Zhang-Suen in numpy).
  TEST_CASE("zhang-suen on a 5x3 rectangle") {
    const auto s = skeletonize_2d(from_rows({"#####", "#####", "#####"}));
    CHECK(s == from_rows({".....", ".##..", "....."}));
  }

  TEST_CASE("zhang-suen on a rectangle with a spur") {
    const auto img = from_rows({".........", ".#######.", ".#######.", "########.", ".#######.", ".#######.", "........."});
    const auto expected =
        from_rows({".........", ".........", ".........", "...##....", ".........", ".........", "........."});
    CHECK(skeletonize_2d(img) == expected);
  }

  TEST_CASE("zhang-suen on a 5x5 square and a ring") {
    const auto sq = from_rows({".........", ".........", "..#####..", "..#####..", "..#####..", "..#####..",
                               "..#####..", ".........", "........."});
    CHECK(count_foreground(skeletonize_2d(sq)) == 1);
    CHECK(skeletonize_2d(sq).at(4, 4) == 1);
    const auto ring = from_rows({"........", ".######.", ".###.##.", ".######.", ".######.", "........"});
    CHECK(skeletonize_2d(ring) == from_rows({"........", "...###..", "...#.#..", "...###..", "........", "........"}));
  }

  TEST_CASE("thin inputs are fixed points") {
    CHECK(skeletonize_2d(from_rows({"......", ".####.", "......"})) == from_rows({"......", ".####.", "......"}));
    CHECK(skeletonize_2d(Binary2D(4, 4)) == Binary2D(4, 4));
    Binary2D diag(5, 5);
    for (int i = 0; i < 5; ++i) diag.at(i, i) = 1;
    CHECK(skeletonize_2d(diag) == diag);
  }

  TEST_CASE("skeleton is a subset preserving 8-components") {
    std::mt19937_64 gen(101);
    for (int t = 0; t < 200; ++t) {
      const auto img = random_blob_2d(gen, 24, 20, 0.05);
      const auto sk = skeletonize_2d(img);
      bool subset = true;
      for (std::size_t n = 0; n < img.pixels.size(); ++n) subset = subset && (!sk.pixels[n] || img.pixels[n]);
      CHECK(subset);
      CHECK(connected_components_2d(sk, Connectivity2D::Eight).component_count() ==
            connected_components_2d(img, Connectivity2D::Eight).component_count());
    }
  }

  // A pixel with eight foreground neighbours is never a simple point, so
  // thinness can only be asked of shapes without holes.
  TEST_CASE("skeleton of hole-free shapes is one pixel wide") {
    std::mt19937_64 gen(102);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
      const auto img = random_blob_2d(gen, 24, 20, 0.0);
      if (has_hole(img)) continue;
      ++checked;
      const auto sk = skeletonize_2d(img);
      bool thin = true;
      for (int y = 0; y < sk.height; ++y)
        for (int x = 0; x < sk.width; ++x) {
          int n = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) n += sk.contains(x + dx, y + dy) && sk.at(x + dx, y + dy);
          thin = thin && n < 9;
        }
      CHECK(thin);
    }
    CHECK(checked > 150);
  }

  TEST_CASE("2x2 block is not erased") {
    const auto s = skeletonize_2d(from_rows({"....", ".##.", ".##.", "...."}));
    CHECK(count_foreground(s) >= 1);
  }

  TEST_CASE("gaussian kernel") {
    const auto k = gaussian_kernel(1.0);
    REQUIRE(k.size() == 7);
    double z = 0;
    for (int i = -3; i <= 3; ++i) z += std::exp(-0.5 * i * i);
    CHECK(k[3] == doctest::Approx(1.0 / z).epsilon(1e-14));
    CHECK(k[0] == doctest::Approx(std::exp(-4.5) / z).epsilon(1e-14));
    CHECK(gaussian_kernel(0.4).size() == 5);
    CHECK_THROWS_AS(gaussian_kernel(0.0), InvalidArgument);
  }

  TEST_CASE("blur of an impulse") {
    Scalar2D img(15, 15);
    img.at(7, 7) = 1.0;
    const auto b = gaussian_blur(img, 1.0);
    double z = 0;
    for (int i = -3; i <= 3; ++i) z += std::exp(-0.5 * i * i);
    CHECK(b.at(7, 7) == doctest::Approx(1.0 / (z * z)).epsilon(1e-12));
    CHECK(b.at(8, 7) == doctest::Approx(std::exp(-0.5) / (z * z)).epsilon(1e-12));
    CHECK(total(b) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("blur preserves constants and is linear") {
    Scalar2D c(9, 6, 2.5);
    for (double v : gaussian_blur(c, 1.7, 0.6).pixels) CHECK(std::abs(v - 2.5) < 1e-6);
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 10; ++t) {
      Scalar2D x(13, 11), y(13, 11), mix(13, 11);
      for (auto& v : x.pixels) v = nd(gen);
      for (auto& v : y.pixels) v = nd(gen);
      const double a = nd(gen), b = nd(gen);
      for (std::size_t n = 0; n < mix.pixels.size(); ++n) mix.pixels[n] = a * x.pixels[n] + b * y.pixels[n];
      const auto bx = gaussian_blur(x, 1.3), by = gaussian_blur(y, 1.3), bm = gaussian_blur(mix, 1.3);
      for (std::size_t n = 0; n < mix.pixels.size(); ++n)
        CHECK(std::abs(bm.pixels[n] - (a * bx.pixels[n] + b * by.pixels[n])) < 1e-6);
    }
  }

  TEST_CASE("blur preserves mass of interior support") {
    Scalar2D img(30, 30);
    img.at(12, 14) = 3.0;
    img.at(15, 15) = -1.0;
    img.at(16, 13) = 0.5;
    CHECK(std::abs(total(gaussian_blur(img, 2.0)) - 2.5) < 1e-6);
  }

  TEST_CASE("3d blur of a constant grid") {
    VoxelGrid g({6, 5, 4}, {1, 1, 1}, DType::Float32, std::vector<float>(120, 3.0f));
    const auto b = gaussian_blur(g, {1.0, 0.5, 2.0});
    for (float v : b.data()) CHECK(std::abs(v - 3.0f) < 1e-5f);
  }

  TEST_CASE("threshold extremes and a blurred disk") {
    Scalar2D img(4, 3);
    for (std::size_t n = 0; n < img.pixels.size(); ++n) img.pixels[n] = static_cast<double>(n);
    CHECK(count_foreground(threshold(img, -1)) == 12);
    CHECK(count_foreground(threshold(img, 11)) == 0);
    Binary2D disk(9, 9);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) disk.at(x, y) = (x - 4) * (x - 4) + (y - 4) * (y - 4) <= 9;
    const auto t = threshold(gaussian_blur(to_scalar(disk), 1.0), 0.5);
    CHECK(t.at(4, 4) == 1);
    CHECK(connected_components_2d(t, Connectivity2D::Eight).component_count() == 1);
  }

  TEST_CASE("boundary of small shapes") {
    Binary2D one(3, 3);
    one.at(1, 1) = 1;
    CHECK(boundary_2d(one) == one);
    Binary2D sq(6, 6);
    for (int y = 1; y < 5; ++y)
      for (int x = 1; x < 5; ++x) sq.at(x, y) = 1;
    const auto b = boundary_2d(sq);
    CHECK(count_foreground(b) == 12);
    CHECK(b.at(2, 2) == 0);
    CHECK(b.at(3, 3) == 0);
    CHECK(boundary_2d(b) == b);
    Binary2D full(3, 3, 1);
    CHECK(count_foreground(boundary_2d(full)) == 8);
  }

  TEST_CASE("surface voxels") {
    BinaryMask one({3, 3, 3}, {1, 1, 1});
    one.set(1, 1, 1, true);
    CHECK(surface_voxels_3d(one) == std::vector<std::size_t>{one.index(1, 1, 1)});
    BinaryMask cube({5, 5, 5}, {1, 1, 1});
    for (int k = 1; k < 4; ++k)
      for (int j = 1; j < 4; ++j)
        for (int i = 1; i < 4; ++i) cube.set(i, j, k, true);
    const auto s = surface_voxels_3d(cube);
    CHECK(s.size() == 26);
    CHECK(std::find(s.begin(), s.end(), cube.index(2, 2, 2)) == s.end());
    BinaryMask full({4, 4, 4}, {1, 1, 1}, std::vector<std::uint8_t>(64, 1));
    CHECK(surface_voxels_3d(full).size() == 64 - 8);
    CHECK_THROWS_AS(surface_voxels_3d(BinaryMask({2, 2, 2}, {1, 1, 1})), EmptyMaskError);
  }

  TEST_CASE("surface matches the direct definition") {
    std::mt19937_64 gen(12);
    for (int t = 0; t < 20; ++t) {
      const auto m = testing::random_blob_mask(gen, {10, 9, 8}, {1, 1, 1});
      const auto s = surface_voxels_3d(m);
      const auto o = testing::oracle_surface(m);
      REQUIRE(s.size() == o.size());
      for (std::size_t n = 0; n < s.size(); ++n) CHECK(m.coords(s[n]) == o[n]);
    }
  }

  TEST_CASE("deformation field") {
    Rng r1(5), r2(5);
    const auto zero = random_deformation_2d(20, 10, r1, 0.0, 4.0);
    CHECK(zero.max_magnitude() == 0.0);
    const auto a = random_deformation_2d(32, 24, r1, 3.0, 4.0);
    CHECK(std::abs(a.max_magnitude() - 3.0) < 1e-6);
    Rng r3(5);
    random_deformation_2d(20, 10, r3, 0.0, 4.0);
    const auto b = random_deformation_2d(32, 24, r3, 3.0, 4.0);
    CHECK(a.dx == b.dx);
    CHECK(a.dy == b.dy);
    CHECK_THROWS_AS(random_deformation_2d(4, 4, r2, -1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(random_deformation_2d(4, 4, r2, 1.0, 0.0), InvalidArgument);
  }

  TEST_CASE("warp with zero and shift fields") {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 20; ++t) {
      const auto img = random_blob_2d(gen, 16, 12);
      CHECK(warp_2d(img, DeformationField2D(16, 12)) == img);
      DeformationField2D shift(16, 12);
      for (auto& v : shift.dx) v = 1.0;
      const auto out = warp_2d(img, shift);
      for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) CHECK(out.at(x, y) == (x + 1 < 16 ? img.at(x + 1, y) : 0));
    }
    CHECK_THROWS_AS(warp_2d(Binary2D(3, 3), DeformationField2D(3, 4)), GeometryMismatch);
  }

  TEST_CASE("warp output stays within the displaced support") {
    std::mt19937_64 gen(7);
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
      const auto img = random_blob_2d(gen, 24, 24);
      const auto f = random_deformation_2d(24, 24, rng, 2.5, 6.0);
      const auto out = warp_2d(img, f);
      const auto grown = dilate_disk(img, std::ceil(2.5 * std::sqrt(2.0)));
      for (std::size_t n = 0; n < out.pixels.size(); ++n)
        if (out.pixels[n]) CHECK(grown.pixels[n] == 1);
    }
  }

  TEST_CASE("break mask coverage") {
    double min_high = 1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng r(seed);
      const auto m = random_break_mask(256, 256, r, 0.999, 8.0);
      min_high = std::min(min_high, static_cast<double>(count_foreground(m)) / (256.0 * 256.0));
    }
    CHECK(min_high >= 0.99);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng r(100 + seed);
      const auto m = random_break_mask(256, 256, r, 0.5, 8.0);
      CHECK(std::abs(static_cast<double>(count_foreground(m)) / 65536.0 - 0.5) <= 0.02);
    }
    Rng a(3), b(3);
    CHECK(random_break_mask(40, 30, a, 0.5, 8.0) == random_break_mask(40, 30, b, 0.5, 8.0));
    CHECK_THROWS_AS(random_break_mask(4, 4, a, 1.0, 8.0), InvalidArgument);
  }

  TEST_CASE("disk dilation") {
    Binary2D img(7, 7);
    img.at(3, 3) = 1;
    CHECK(count_foreground(dilate_disk(img, 1.0)) == 5);
    CHECK(count_foreground(dilate_disk(img, 1.5)) == 9);
    CHECK(dilate_disk(img, 0.0) == img);
  }
}
