#include "doctest.h"

#include <cmath>
#include <set>

#include "promptsim/experiment.hpp"
#include "promptsim/oracle_backend.hpp"
#include "promptsim/phantom.hpp"
#include "promptsim/session.hpp"
#include "test_support.hpp"

namespace promptsim {

namespace {

class Perfect final : public Segmenter {
 public:
  explicit Perfect(BinaryMask gt) : gt_(std::move(gt)) {}
  BinaryMask segment(const SegmentationRequest&) override {
    ++calls;
    return gt_;
  }
  int calls = 0;
  int ended = 0;
  void end_session() override { ++ended; }

 private:
  BinaryMask gt_;
};

/// Adds a slab of gt each call, so Dice rises over several iterations.
class Slabs final : public Segmenter {
 public:
  explicit Slabs(BinaryMask gt) : gt_(std::move(gt)) {}
  BinaryMask segment(const SegmentationRequest& r) override {
    ++k_;
    BinaryMask out(gt_.dims(), gt_.spacing());
    for (std::size_t n = 0; n < out.size(); ++n) {
      out.data()[n] = gt_.data()[n] && out.coords(n).k < 2 * k_ ? 1 : 0;
    }
    if (r.previous_mask) out = mask_or(out, *r.previous_mask);
    return out;
  }

 private:
  BinaryMask gt_;
  std::int64_t k_ = 0;
};

class FailsAt final : public Segmenter {
 public:
  FailsAt(BinaryMask m, int at) : m_(std::move(m)), at_(at) {}
  BinaryMask segment(const SegmentationRequest& r) override {
    if (r.iteration == at_) throw Error("backend fell over");
    return m_;
  }

 private:
  BinaryMask m_;
  int at_;
};

struct Recorder final : SessionObserver {
  std::vector<PromptSet> prompts;
  void on_iteration(int, const PromptSet& p, const BinaryMask&) override { prompts.push_back(p); }
};

PhantomSpec small_phantoms() {
  PhantomSpec s;
  s.dims = {32, 32, 32};
  s.radii_mm = {8.5, 6.5, 5.0};
  s.centre_jitter_mm = 2.0;
  s.deformation_mm = 2.0;
  s.deformation_scale_mm = 6.0;
  return s;
}

std::shared_ptr<const VoxelGrid> as_image(const BinaryMask& gt) {
  auto g = std::make_shared<VoxelGrid>(gt.dims(), gt.spacing(), DType::Float32);
  for (std::size_t n = 0; n < gt.size(); ++n) g->data()[n] = gt.data()[n] ? 0.7f : 0.3f;
  return g;
}

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("perfect backend with early stop gives a single perfect iteration") {
    std::mt19937_64 gen(71);
    const auto gt = testing::random_blob_mask(gen, {16, 16, 12}, {1, 1, 1.5}, 3, 0.0);
    Perfect be(gt);
    SessionConfig cfg;
    cfg.early_stop = true;
    const auto rec = run_session(as_image(gt), gt, be, cfg, 1, "p");
    REQUIRE(rec.iterations.size() == 1);
    CHECK(rec.iterations[0].metrics.whole == MetricValues{1.0, 1.0, 0.0, 0.0});
    CHECK(rec.stop_reason == StopReason::EarlyStop);
    CHECK(rec.success);
    CHECK_FALSE(rec.failed);
    CHECK(be.ended == 1);
  }

  TEST_CASE("session stops once the prediction equals gt") {
    std::mt19937_64 gen(72);
    const auto gt = testing::random_blob_mask(gen, {16, 16, 12}, {1, 1, 1}, 3, 0.0);
    Perfect be(gt);
    const auto rec = run_session(as_image(gt), gt, be, SessionConfig{}, 1, "p");
    CHECK(rec.iterations.size() == 1);
    CHECK(rec.stop_reason == StopReason::Converged);
    CHECK(be.calls == 1);
  }

  TEST_CASE("iterations, ratios and prompts are recorded per call") {
    const auto gt = testing::oracle_ball({20, 20, 20}, {1, 1, 1}, {10, 10, 10}, 7.0);
    Slabs be(gt);
    SessionConfig cfg;
    cfg.iterations = 4;
    cfg.prompts.scribble_style = ScribbleStyle::Centerline;
    Recorder obs;
    const auto rec = run_session(as_image(gt), gt, be, cfg, 9, "slabs", "hash", &obs);
    REQUIRE(rec.iterations.size() == 4);
    CHECK(rec.stop_reason == StopReason::Iterations);
    CHECK(rec.config_hash == "hash");
    CHECK(rec.seed == 9);
    REQUIRE(obs.prompts.size() == 4);
    for (int k = 0; k < 4; ++k) {
      const auto& it = rec.iterations[static_cast<std::size_t>(k)];
      CHECK(it.iteration == k);
      CHECK(it.prompts == PromptSummary::of(obs.prompts[static_cast<std::size_t>(k)]));
      CHECK(it.prompt_ratio ==
            static_cast<double>(it.prompts.scribble_voxels) / static_cast<double>(gt.count()));
      if (k > 0) CHECK(it.metrics.whole.dice >= rec.iterations[static_cast<std::size_t>(k - 1)].metrics.whole.dice);
      CHECK_FALSE(it.metrics.annotated.has_value());
    }
    CHECK(obs.prompts[0] == build_prompt_set(gt, nullptr, cfg.prompts, 0, 9));
  }

  TEST_CASE("annotated metrics use every slice scribbled so far") {
    const auto gt = testing::oracle_ball({20, 20, 20}, {1, 1, 1}, {10, 10, 10}, 7.0);
    Slabs be(gt);
    SessionConfig cfg;
    cfg.iterations = 3;
    cfg.prompts.scribble_style = ScribbleStyle::Centerline;
    cfg.prompts.slice_frequency = 3;
    cfg.prompts.min_region_voxels = 1;
    Recorder obs;
    const auto rec = run_session(as_image(gt), gt, be, cfg, 3, "ann", {}, &obs);
    REQUIRE(rec.iterations.size() == 3);
    BinaryMask pred(gt.dims(), gt.spacing());
    std::set<std::int64_t> slices;
    Slabs replay(gt);
    for (std::size_t k = 0; k < 3; ++k) {
      for (const auto& s : obs.prompts[k].scribbles) slices.insert(s.slice_index);
      SegmentationRequest r;
      r.image = as_image(gt);
      if (k > 0) r.previous_mask = pred;
      pred = replay.segment(r);
      REQUIRE(rec.iterations[k].metrics.annotated.has_value());
      const AnnotatedSlices a{SliceAxis::Transverse, {slices.begin(), slices.end()}};
      CHECK(*rec.iterations[k].metrics.annotated ==
            score_total(restrict_to_slices(pred, a), restrict_to_slices(gt, a), 1.0));
    }
  }

  TEST_CASE("backend failures keep the partial record") {
    const auto gt = testing::oracle_ball({16, 16, 16}, {1, 1, 1}, {8, 8, 8}, 5.0);
    FailsAt be(BinaryMask(gt.dims(), gt.spacing()), 2);
    const auto rec = run_session(as_image(gt), gt, be, SessionConfig{}, 1, "f");
    CHECK(rec.failed);
    CHECK_FALSE(rec.success);
    CHECK(rec.stop_reason == StopReason::Failed);
    CHECK(rec.iterations.size() == 2);
    CHECK(rec.error == "backend fell over");

    FailsAt wrong(BinaryMask({16, 16, 15}, gt.spacing()), -1);
    const auto rec2 = run_session(as_image(gt), gt, wrong, SessionConfig{}, 1, "g");
    CHECK(rec2.failed);
    CHECK(rec2.iterations.empty());
  }

  TEST_CASE("empty masks score without surfaces") {
    const BinaryMask e({4, 3, 2}, {1, 2, 2});
    auto one = e;
    one.set(1, 1, 1, true);
    CHECK(score_total(e, e, 1.0) == MetricValues{1.0, 1.0, 0.0, 0.0});
    const double diag = std::sqrt(16.0 + 36.0 + 16.0);
    CHECK(score_total(e, one, 1.0) == MetricValues{0.0, 0.0, diag, diag});
    CHECK(score_total(one, e, 1.0) == MetricValues{0.0, 0.0, diag, diag});
    CHECK(score_total(one, one, 1.0) == MetricValues{1.0, 1.0, 0.0, 0.0});
  }

  TEST_CASE("oracle sessions never lose Dice") {
    const auto spec = small_phantoms();
    SessionConfig cfg;
    cfg.prompts.scribble_style = ScribbleStyle::WarpedCenterline;
    for (int i = 0; i < 20; ++i) {
      const auto ph = generate_phantom(spec, i);
      const std::uint64_t seed = session_seed(11, i);
      auto be = OracleBackend::with_corruption(ph.gt, OracleParams{}, oracle_seed(seed));
      const auto rec = run_session(std::make_shared<VoxelGrid>(ph.image), ph.gt, be, cfg, seed, phantom_id(i));
      REQUIRE_FALSE(rec.failed);
      for (std::size_t k = 1; k < rec.iterations.size(); ++k) {
        CHECK(rec.iterations[k].metrics.whole.dice >= rec.iterations[k - 1].metrics.whole.dice);
      }
    }
  }

  TEST_CASE("sessions are deterministic in the seed") {
    const auto ph = generate_phantom(small_phantoms(), 0);
    SessionConfig cfg;
    cfg.prompts.scribble_style = ScribbleStyle::WarpedBoundary;
    cfg.prompts.slice_frequency = 2;
    auto run = [&](std::uint64_t seed) {
      auto be = OracleBackend::with_corruption(ph.gt, OracleParams{}, oracle_seed(seed));
      return run_session(std::make_shared<VoxelGrid>(ph.image), ph.gt, be, cfg, seed, "d");
    };
    CHECK(run(5) == run(5));
    CHECK_FALSE(run(5) == run(6));
  }

  TEST_CASE("config validation and stop reason names") {
    SessionConfig c;
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.success_dice = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    for (auto r : {StopReason::Iterations, StopReason::Converged, StopReason::EarlyStop, StopReason::Failed}) {
      CHECK(parse_stop_reason(to_string(r)) == r);
    }
    CHECK_THROWS_AS(parse_stop_reason("bored"), InvalidArgument);
  }
}

}  // namespace promptsim
