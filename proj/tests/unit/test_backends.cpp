#include "doctest.h"

#include <deque>

#include "promptsim/metrics.hpp"
#include "promptsim/native_format.hpp"
#include "promptsim/oracle_backend.hpp"
#include "promptsim/region_grow_backend.hpp"
#include "promptsim/replay_backend.hpp"
#include "test_support.hpp"

namespace promptsim {

namespace {

std::shared_ptr<const VoxelGrid> flat_image(const Dims& d, const Spacing& s, float value = 0.5f) {
  return std::make_shared<VoxelGrid>(d, s, DType::Float32, std::vector<float>(d.voxel_count(), value));
}

SegmentationRequest request_with(std::shared_ptr<const VoxelGrid> image, PromptSet prompts, int iteration = 0) {
  SegmentationRequest r;
  r.image = std::move(image);
  r.prompts = std::move(prompts);
  r.iteration = iteration;
  r.session_id = "s";
  return r;
}

PromptSet one_point(const Index3& v, Polarity p, int iteration = 0) {
  PromptSet s;
  s.iteration = iteration;
  s.points.push_back({v, p});
  return s;
}

// Unit-step BFS distance on an isotropic grid, counted in voxels.
std::vector<int> bfs_steps(const Dims& d, const Index3& seed) {
  std::vector<int> dist(d.voxel_count(), -1);
  auto flat = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return static_cast<std::size_t>(i + d.nx * (j + d.ny * k));
  };
  std::deque<Index3> q{seed};
  dist[flat(seed.i, seed.j, seed.k)] = 0;
  const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!q.empty()) {
    const auto v = q.front();
    q.pop_front();
    for (const auto& s : steps) {
      const Index3 w{v.i + s[0], v.j + s[1], v.k + s[2]};
      if (!d.contains(w.i, w.j, w.k) || dist[flat(w.i, w.j, w.k)] >= 0) continue;
      dist[flat(w.i, w.j, w.k)] = dist[flat(v.i, v.j, v.k)] + 1;
      q.push_back(w);
    }
  }
  return dist;
}

}  // namespace

TEST_SUITE("backends") {
  TEST_CASE("prompt voxels split by polarity and drop out-of-grid voxels") {
    PromptSet s;
    s.points = {{{1, 1, 1}, Polarity::Positive}, {{2, 2, 2}, Polarity::Negative}, {{9, 0, 0}, Polarity::Positive}};
    Scribble sc;
    sc.voxels = {{0, 0, 1}, {1, 0, 1}};
    sc.polarity = Polarity::Negative;
    sc.slice_index = 1;
    s.scribbles.push_back(sc);
    const Dims d{4, 4, 4};
    CHECK(prompt_voxels(s, Polarity::Positive, d) == std::vector<Index3>{{1, 1, 1}});
    CHECK(prompt_voxels(s, Polarity::Negative, d) == std::vector<Index3>{{2, 2, 2}, {0, 0, 1}, {1, 0, 1}});
  }

  TEST_CASE("ball visitor matches the brute-force ball") {
    std::mt19937_64 gen(31);
    for (int t = 0; t < 20; ++t) {
      const auto s = testing::random_spacing(gen);
      const Dims d{9, 8, 7};
      std::uniform_int_distribution<int> ui(0, 6);
      const Index3 c{ui(gen), ui(gen), ui(gen)};
      const double r = 0.5 + 0.4 * t;
      BinaryMask m(d, s);
      for_each_in_ball(d, s, c, r, [&](std::size_t n) { m.data()[n] = 1; });
      CHECK(m == testing::oracle_ball(d, s, c, r));
    }
  }

  TEST_CASE("result geometry is checked") {
    const Dims d{4, 4, 4};
    const Spacing s{1, 1, 1};
    auto req = request_with(flat_image(d, s), {});
    CHECK_NOTHROW(check_result_geometry(req, BinaryMask(d, s)));
    CHECK_THROWS_AS(check_result_geometry(req, BinaryMask({4, 4, 5}, s)), GeometryMismatch);
    CHECK_THROWS_AS(check_result_geometry(req, BinaryMask(d, {1, 1, 2})), GeometryMismatch);
  }

  TEST_CASE("oracle without corruption returns gt") {
    std::mt19937_64 gen(41);
    const Spacing s{1, 1, 1};
    const auto gt = testing::random_blob_mask(gen, {16, 16, 16}, s);
    OracleBackend be(gt, gt);
    const auto out = be.segment(request_with(flat_image(gt.dims(), s), one_point({8, 8, 8}, Polarity::Positive)));
    CHECK(out == gt);
  }

  TEST_CASE("oracle repairs an FN blob within radius of one positive point") {
    const Dims d{32, 32, 32};
    const Spacing s{1, 1, 1};
    const auto gt = testing::oracle_ball(d, s, {16, 16, 16}, 10.0);
    const auto hole = testing::oracle_ball(d, s, {16, 16, 8}, 3.0);
    const auto initial = mask_minus(gt, hole);
    REQUIRE(testing::count_and(gt, hole) > 0);
    OracleBackend be(gt, initial, 8.0);
    const double before = dice(initial, gt);
    const auto out = be.segment(request_with(flat_image(d, s), one_point({16, 16, 8}, Polarity::Positive)));
    CHECK(out == gt);
    CHECK(dice(out, gt) > before);
  }

  TEST_CASE("oracle negative prompt removes FP voxels and keeps gt") {
    const Dims d{32, 32, 32};
    const Spacing s{1, 1, 1};
    const auto gt = testing::oracle_ball(d, s, {12, 16, 16}, 6.0);
    const auto extra = testing::oracle_ball(d, s, {24, 16, 16}, 4.0);
    const auto initial = mask_or(gt, extra);
    OracleBackend be(gt, initial, 3.0);
    const auto out = be.segment(request_with(flat_image(d, s), one_point({24, 16, 16}, Polarity::Negative)));
    const auto near = testing::oracle_ball(d, s, {24, 16, 16}, 3.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
      if (near.data()[n] && extra.data()[n] && !gt.data()[n]) CHECK(out.data()[n] == 0);
      if (gt.data()[n]) CHECK(out.data()[n] == 1);
    }
    CHECK(out.count() < initial.count());
    CHECK(out.count() > gt.count());  // the far side of the blob stays
  }

  TEST_CASE("oracle prompts outside error regions change nothing") {
    const Dims d{16, 16, 16};
    const Spacing s{1, 1, 1};
    const auto gt = testing::oracle_ball(d, s, {8, 8, 8}, 5.0);
    const auto initial = mask_minus(gt, testing::oracle_ball(d, s, {8, 8, 3}, 2.0));
    OracleBackend be(gt, initial, 8.0);
    PromptSet p = one_point({8, 8, 8}, Polarity::Positive);  // inside current, not FN
    p.points.push_back({{0, 0, 0}, Polarity::Negative});     // background, not FP
    CHECK(be.segment(request_with(flat_image(d, s), p)) == initial);
  }

  TEST_CASE("oracle box removes everything outside it") {
    const Dims d{16, 16, 16};
    const Spacing s{1, 1, 1};
    const auto gt = testing::oracle_ball(d, s, {8, 8, 8}, 4.0);
    const auto initial = mask_or(gt, testing::oracle_ball(d, s, {1, 1, 1}, 1.0));
    OracleBackend be(gt, initial);
    PromptSet p;
    p.box = ground_truth_box(gt);
    CHECK(be.segment(request_with(flat_image(d, s), p)) == gt);
  }

  TEST_CASE("oracle update does not depend on prompt order") {
    std::mt19937_64 gen(43);
    const Spacing s{1, 1, 1};
    for (int t = 0; t < 5; ++t) {
      const auto gt = testing::random_blob_mask(gen, {20, 20, 20}, s, 3, 0.0);
      Rng rng(100 + t);
      const auto initial = corrupt_mask(gt, rng, 0.6, 0.85);
      PromptConfig pc;
      pc.points_per_iteration = 6;
      pc.scribble_style = ScribbleStyle::Centerline;
      const auto set = build_prompt_set(gt, &initial, pc, 1, 7 + t);
      REQUIRE(set.points.size() > 1);
      auto reversed = set;
      std::reverse(reversed.points.begin(), reversed.points.end());
      std::reverse(reversed.scribbles.begin(), reversed.scribbles.end());
      OracleBackend a(gt, initial), b(gt, initial);
      const auto img = flat_image(gt.dims(), s);
      CHECK(a.segment(request_with(img, set, 1)) == b.segment(request_with(img, reversed, 1)));
    }
  }

  TEST_CASE("corruption lands in the requested Dice range and is seeded") {
    std::mt19937_64 gen(44);
    for (int t = 0; t < 10; ++t) {
      const auto s = testing::random_spacing(gen);
      const auto gt = testing::oracle_ball({24, 24, 24}, s, {12, 12, 12}, 6.0 + t % 3);
      Rng r1(500 + t), r2(500 + t);
      const auto c = corrupt_mask(gt, r1, 0.6, 0.85);
      const double dc = dice(c, gt);
      CHECK(dc >= 0.6);
      CHECK(dc <= 0.85);
      CHECK(corrupt_mask(gt, r2, 0.6, 0.85) == c);
    }
    Rng r(1);
    const auto gt = testing::oracle_ball({8, 8, 8}, {1, 1, 1}, {4, 4, 4}, 2.0);
    CHECK_THROWS_AS(corrupt_mask(gt, r, 0.9, 0.5), InvalidArgument);
    CHECK_THROWS_AS(corrupt_mask(BinaryMask({8, 8, 8}, {1, 1, 1}), r, 0.6, 0.85), Error);
  }

  TEST_CASE("region grow on a homogeneous image is a geodesic ball") {
    const Dims d{21, 21, 21};
    const Spacing s{1, 1, 1};
    RegionGrowBackend be({0.5, 5.0, 2.0});
    const auto out = be.segment(request_with(flat_image(d, s), one_point({10, 10, 10}, Polarity::Positive)));
    const auto steps = bfs_steps(d, {10, 10, 10});
    for (std::size_t n = 0; n < out.size(); ++n) CHECK(out.data()[n] == (steps[n] >= 0 && steps[n] <= 5 ? 1 : 0));
  }

  TEST_CASE("geodesic growth counts anisotropic steps in mm") {
    const Dims d{9, 9, 9};
    const Spacing s{1.0, 2.0, 0.5};
    const auto out = geodesic_grow(d, s, {{4, 4, 4}}, 2.0, [](std::size_t) { return true; });
    for (std::size_t n = 0; n < out.size(); ++n) {
      const auto v = out.coords(n);
      const double path = std::abs(v.i - 4) * 1.0 + std::abs(v.j - 4) * 2.0 + std::abs(v.k - 4) * 0.5;
      CHECK(out.data()[n] == (path <= 2.0 + 1e-12 ? 1 : 0));
    }
  }

  TEST_CASE("region grow stays in the seeded half") {
    const Dims d{16, 12, 10};
    const Spacing s{1, 1, 1};
    auto img = std::make_shared<VoxelGrid>(d, s, DType::Float32);
    for (std::int64_t k = 0; k < d.nz; ++k)
      for (std::int64_t j = 0; j < d.ny; ++j)
        for (std::int64_t i = 0; i < d.nx; ++i) img->at(i, j, k) = i < 8 ? 0.0f : 1.0f;
    RegionGrowBackend be({0.5, 100.0, 2.0});
    const auto out = be.segment(request_with(img, one_point({3, 6, 5}, Polarity::Positive)));
    for (std::size_t n = 0; n < out.size(); ++n) CHECK(out.data()[n] == (out.coords(n).i < 8 ? 1 : 0));
  }

  TEST_CASE("region grow negative prompt removes its barrier ball") {
    const Dims d{21, 21, 21};
    const Spacing s{1, 1, 1};
    const auto img = flat_image(d, s);
    RegionGrowBackend be({0.5, 8.0, 2.0});
    const auto first = be.segment(request_with(img, one_point({10, 10, 10}, Polarity::Positive)));
    auto req = request_with(img, one_point({10, 10, 14}, Polarity::Negative, 1), 1);
    req.previous_mask = first;
    const auto second = be.segment(req);
    const auto ball = testing::oracle_ball(d, s, {10, 10, 14}, 2.0);
    CHECK(testing::count_and(second, ball) == 0);
    CHECK(second == mask_minus(first, ball));
  }

  TEST_CASE("region grow needs a positive seed on the first call") {
    const Dims d{8, 8, 8};
    const Spacing s{1, 1, 1};
    RegionGrowBackend be;
    CHECK_THROWS_AS(be.segment(request_with(flat_image(d, s), one_point({1, 1, 1}, Polarity::Negative))),
                    InvalidArgument);
    CHECK_THROWS_AS(RegionGrowBackend({-1.0, 1.0, 1.0}), InvalidArgument);
  }

  TEST_CASE("region grow box confines the session") {
    const Dims d{16, 16, 16};
    const Spacing s{1, 1, 1};
    const auto img = flat_image(d, s);
    RegionGrowBackend be({0.5, 100.0, 2.0});
    PromptSet p = one_point({8, 8, 8}, Polarity::Positive);
    p.box = BoxPrompt{{4, 4, 4}, {11, 11, 11}};
    const auto out = be.segment(request_with(img, p));
    CHECK(out.count() == 8u * 8u * 8u);
    auto next = request_with(img, one_point({8, 8, 9}, Polarity::Positive, 1), 1);
    CHECK(be.segment(next) == out);
    be.end_session();
    CHECK(be.segment(request_with(img, one_point({8, 8, 8}, Polarity::Positive))).count() == d.voxel_count());
  }

  TEST_CASE("replay returns stored masks and reports missing iterations") {
    testing::TempDir dir("replay");
    std::mt19937_64 gen(51);
    const Dims d{8, 7, 6};
    const Spacing s{1.0, 1.0, 2.0};
    const auto gt = testing::random_blob_mask(gen, d, s);
    for (int k = 0; k < 11; ++k) write_mask(gt, dir / ("iter_" + std::to_string(k) + (k % 2 ? ".vgh" : ".nii")));
    ReplayBackend be(dir.path());
    const auto img = flat_image(d, s);
    for (int k = 0; k < 11; ++k) {
      const auto out = be.segment(request_with(img, {}, k));
      CHECK(out == gt);
      CHECK(score(out, gt) == MetricValues{1.0, 1.0, 0.0, 0.0});
    }
    CHECK_THROWS_AS(be.segment(request_with(img, {}, 12)), IoError);
    CHECK_THROWS_AS(be.segment(request_with(flat_image({8, 7, 5}, s), {}, 0)), GeometryMismatch);
    CHECK_THROWS_AS(ReplayBackend(dir / "missing"), IoError);
  }

  TEST_CASE("dilation adds positive balls and removes negative ones") {
    const Dims d{12, 12, 12};
    const Spacing s{1, 1, 1};
    const auto img = flat_image(d, s);
    DilationBackend be(2.0);
    PromptSet p = one_point({3, 3, 3}, Polarity::Positive);
    p.points.push_back({{8, 8, 8}, Polarity::Positive});
    p.points.push_back({{4, 3, 3}, Polarity::Negative});
    const auto out = be.segment(request_with(img, p));
    const auto expected = mask_minus(
        mask_or(testing::oracle_ball(d, s, {3, 3, 3}, 2.0), testing::oracle_ball(d, s, {8, 8, 8}, 2.0)),
        testing::oracle_ball(d, s, {4, 3, 3}, 2.0));
    CHECK(out == expected);
    auto req = request_with(img, {}, 1);
    req.previous_mask = out;
    CHECK(be.segment(req) == out);
  }
}

}  // namespace promptsim
