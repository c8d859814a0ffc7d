// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ganom/error.hpp"
#include "ganom/evaluation.hpp"
#include "oracles.hpp"

using namespace ganom;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<det::AbnormalityMap> wrap_maps(const std::vector<Tensor>& maps) {
  std::vector<det::AbnormalityMap> out;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    det::AbnormalityMap m;
    m.map = maps[i];
    m.frame_index = static_cast<int>(i);
    out.push_back(std::move(m));
  }
  return out;
}

eval::RocCurve two_point_curve() {
  eval::RocCurve c;
  c.points = {{kInf, 0, 0}, {-kInf, 1, 1}};
  return c;
}

}  // namespace

TEST_CASE("frame_scores is the pixel max; thresholding it is the at-least-"
          "one-pixel rule") {
  std::vector<Tensor> maps;
  maps.push_back(oracles::random_tensor(1, 8, 8, 1, 0.0, 0.5));
  maps.push_back(Tensor(1, 8, 8));  // all zero
  maps[0].at(0, 3, 4) = 0.9;
  auto wrapped = wrap_maps(maps);
  std::vector<double> scores = eval::frame_scores(wrapped);
  CHECK(scores[0] == 0.9);
  CHECK(scores[1] == 0.0);

  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const double tau = rng.uniform(-0.1, 1.1);
    for (std::size_t f = 0; f < maps.size(); ++f) {
      bool any_pixel = false;
      for (double v : maps[f].v) any_pixel |= v >= tau;
      CHECK((scores[f] >= tau) == any_pixel);
    }
  }
}

TEST_CASE("frame-level ROC on perfectly separated scores") {
  std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
  std::vector<std::uint8_t> labels = {1, 1, 0, 0};
  eval::RocCurve c = eval::frame_level_roc(scores, labels);
  CHECK(eval::auc(c) == doctest::Approx(1.0));
  CHECK(eval::eer(c) == doctest::Approx(0.0));
  bool through_0_1 = false;
  for (const auto& p : c.points)
    if (p.fpr == 0.0 && p.tpr == 1.0) through_0_1 = true;
  CHECK(through_0_1);
}

TEST_CASE("single-class labels are an undefined-metric error") {
  std::vector<double> scores = {0.5, 0.6};
  std::vector<std::uint8_t> ones = {1, 1}, zeros = {0, 0};
  try {
    eval::frame_level_roc(scores, ones);
    FAIL("expected undefined-metric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndefinedMetric);
  }
  CHECK_THROWS_AS(eval::frame_level_roc(scores, zeros), Error);
}

TEST_CASE("trapezoidal AUC equals the Mann-Whitney oracle on 200 random "
          "sets") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_below(63);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse quantization forces plenty of ties.
      scores[i] = std::floor(rng.uniform(0.0, 8.0)) / 8.0;
      labels[i] = rng.next_double() < 0.5;
      (labels[i] ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
      labels[0] = 1;
      labels[n - 1] = 0;
    }
    eval::RocCurve c = eval::frame_level_roc(scores, labels);
    const double got = eval::auc(c);
    const double want = oracles::mann_whitney_auc(scores, labels);
    CHECK(std::abs(got - want) <= 1e-9);
  }
}

TEST_CASE("ROC rates are monotone in the threshold") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.next_below(40);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform(0.0, 1.0);
      labels[i] = rng.next_double() < 0.4;
    }
    labels[0] = 1;
    labels[1] = 0;
    eval::RocCurve c = eval::frame_level_roc(scores, labels);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
      CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
      CHECK(c.points[i].threshold <= c.points[i - 1].threshold);
    }
    CHECK(c.points.front().fpr == 0.0);
    CHECK(c.points.back().fpr == 1.0);
  }
}

TEST_CASE("AUC is invariant under strictly monotone score transforms") {
  Rng rng(5);
  std::vector<double> scores(40);
  std::vector<std::uint8_t> labels(40);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform(-2.0, 2.0);
    labels[i] = rng.next_double() < 0.5;
  }
  labels[0] = 1;
  labels[1] = 0;
  const double base = eval::auc(eval::frame_level_roc(scores, labels));
  std::vector<double> warped = scores;
  for (double& s : warped) s = std::exp(s) + 3.0 * s;
  const double after = eval::auc(eval::frame_level_roc(warped, labels));
  CHECK(std::abs(base - after) <= 1e-12);
}

TEST_CASE("auc closed forms and grid oracle") {
  CHECK(eval::auc(two_point_curve()) == doctest::Approx(0.5));

  eval::RocCurve step;
  step.points = {{kInf, 0, 0}, {1.0, 0, 1}, {-kInf, 1, 1}};
  CHECK(eval::auc(step) == doctest::Approx(1.0));

  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 20;
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform(0.0, 1.0);
      labels[i] = rng.next_double() < 0.5;
    }
    labels[0] = 1;
    labels[1] = 0;
    eval::RocCurve c = eval::frame_level_roc(scores, labels);
    CHECK(std::abs(eval::auc(c) - oracles::auc_grid(c, 512)) <= 1e-9);
  }
}

TEST_CASE("eer closed forms and bisection oracle") {
  CHECK(eval::eer(two_point_curve()) == doctest::Approx(0.5));

  eval::RocCurve perfect;
  perfect.points = {{kInf, 0, 0}, {1.0, 0, 1}, {-kInf, 1, 1}};
  CHECK(eval::eer(perfect) == doctest::Approx(0.0));

  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.next_below(60);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform(0.0, 1.0);
      labels[i] = rng.next_double() < 0.5;
    }
    labels[0] = 1;
    labels[1] = 0;
    eval::RocCurve c = eval::frame_level_roc(scores, labels);
    CHECK(std::abs(eval::eer(c) - oracles::eer_bisection(c)) <= 1e-6);
    CHECK(eval::eer(c) >= 0.0);
    CHECK(eval::eer(c) <= 1.0);
    CHECK(eval::auc(c) >= 0.0);
    CHECK(eval::auc(c) <= 1.0);
  }
}

// ---------------------------------------------------------------------------
// pixel-level protocol

namespace {

struct PixelFixture {
  std::vector<Tensor> maps;
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<eval::EvalFrame> frames;

  void add_normal(Tensor map) {
    maps.push_back(std::move(map));
    masks.emplace_back();
  }
  void add_abnormal(Tensor map, std::vector<std::uint8_t> mask) {
    maps.push_back(std::move(map));
    masks.push_back(std::move(mask));
  }
  std::vector<eval::EvalFrame>& finish(int h, int w) {
    frames.clear();
    for (std::size_t i = 0; i < maps.size(); ++i) {
      eval::EvalFrame f;
      f.map = &maps[i];
      f.label = !masks[i].empty();
      if (f.label) {
        f.mask = &masks[i];
        f.mask_h = h;
        f.mask_w = w;
      }
      frames.push_back(f);
    }
    return frames;
  }
};

}  // namespace

TEST_CASE("40% coverage boundary is inclusive") {
  // 10 GT pixels; exactly 4 of them score high -> true positive at the high
  // threshold. With 1000 GT pixels and 399 high -> false positive.
  auto build = [](int gt_count, int covered) {
    PixelFixture fx;
    const int w = 40;
    Tensor amap(1, 40, w);
    std::vector<std::uint8_t> mask(40 * w, 0);
    for (int i = 0; i < gt_count; ++i) mask[i] = 1;
    for (int i = 0; i < covered; ++i) amap.v[i] = 1.0;
    for (int i = covered; i < gt_count; ++i) amap.v[i] = 0.2;
    fx.add_abnormal(amap, mask);
    Tensor low(1, 40, w);
    low.at(0, 30, 30) = 0.4;
    fx.add_normal(low);
    return fx;
  };

  {
    PixelFixture fx = build(10, 4);  // exactly 40.0%
    eval::RocCurve c = eval::pixel_level_roc(fx.finish(40, 40));
    // At tau = 1.0: covered = 4 >= 0.4*10 -> TP; normal frame not flagged.
    bool found = false;
    for (const auto& p : c.points)
      if (p.threshold == 1.0) {
        CHECK(p.tpr == doctest::Approx(1.0));
        CHECK(p.fpr == doctest::Approx(0.0));
        found = true;
      }
    CHECK(found);
  }
  {
    PixelFixture fx = build(1000, 399);  // 39.9%
    eval::RocCurve c = eval::pixel_level_roc(fx.finish(40, 40));
    bool found = false;
    for (const auto& p : c.points)
      if (p.threshold == 1.0) {
        CHECK(p.tpr == doctest::Approx(0.0));
        CHECK(p.fpr == doctest::Approx(1.0));  // failed overlap counts FP
        found = true;
      }
    CHECK(found);
  }
  CHECK(eval::covers_enough(4, 10));
  CHECK_FALSE(eval::covers_enough(399, 1000));
  CHECK(eval::covers_enough(400, 1000));
}

TEST_CASE("prediction equal to the ground truth is a true positive at every "
          "threshold below the mask minimum") {
  PixelFixture fx;
  Tensor amap(1, 8, 8);
  std::vector<std::uint8_t> mask(64, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) {
      mask[y * 8 + x] = 1;
      amap.at(0, y, x) = 0.5 + 0.05 * y;
    }
  fx.add_abnormal(amap, mask);
  Tensor nrm(1, 8, 8);
  nrm.at(0, 0, 0) = 0.3;
  fx.add_normal(nrm);
  eval::RocCurve c = eval::pixel_level_roc(fx.finish(8, 8));
  for (const auto& p : c.points) {
    if (!std::isfinite(p.threshold)) continue;
    if (p.threshold <= 0.5) CHECK(p.tpr == doctest::Approx(1.0));
  }
}

TEST_CASE("pixel-level ROC equals the brute-force oracle on random 16x16 "
          "instances") {
  Rng rng(31);
  PixelFixture fx;
  for (int f = 0; f < 50; ++f) {
    Tensor amap = oracles::random_tensor(1, 16, 16, 1000 + f, 0.0, 1.0);
    if (f % 2 == 0) {
      std::vector<std::uint8_t> mask(256, 0);
      bool any = false;
      for (int i = 0; i < 256; ++i) {
        mask[i] = rng.next_double() < 0.2;
        any |= mask[i];
      }
      if (!any) mask[17] = 1;
      fx.add_abnormal(std::move(amap), std::move(mask));
    } else {
      fx.add_normal(std::move(amap));
    }
  }
  auto& frames = fx.finish(16, 16);
  eval::RocCurve got = eval::pixel_level_roc(frames);
  eval::RocCurve want = oracles::brute_pixel_roc(frames);
  REQUIRE(got.points.size() == want.points.size());
  for (std::size_t i = 0; i < got.points.size(); ++i) {
    CHECK(got.points[i].threshold == want.points[i].threshold);
    CHECK(got.points[i].fpr == want.points[i].fpr);
    CHECK(got.points[i].tpr == want.points[i].tpr);
  }

  // The alternative convention (misses stay misses) also matches.
  eval::PixelRocOptions opts;
  opts.failed_overlap_counts_fp = false;
  eval::RocCurve got2 = eval::pixel_level_roc(frames, opts);
  eval::RocCurve want2 = oracles::brute_pixel_roc(frames, false);
  REQUIRE(got2.points.size() == want2.points.size());
  for (std::size_t i = 0; i < got2.points.size(); ++i) {
    CHECK(got2.points[i].fpr == want2.points[i].fpr);
    CHECK(got2.points[i].tpr == want2.points[i].tpr);
  }
}

TEST_CASE("abnormal frame without a mask raises ground-truth-missing") {
  PixelFixture fx;
  fx.add_abnormal(oracles::random_tensor(1, 8, 8, 3, 0.0, 1.0),
                  std::vector<std::uint8_t>(64, 1));
  fx.add_normal(Tensor(1, 8, 8));
  auto& frames = fx.finish(8, 8);
  frames[0].mask = nullptr;  // simulate a missing mask file
  try {
    eval::pixel_level_roc(frames);
    FAIL("expected ground-truth-missing error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GroundTruthMissing);
  }
}

TEST_CASE("pixel protocol degenerates to frame level for full-frame masks "
          "and constant maps") {
  PixelFixture fx;
  Rng rng(41);
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (int f = 0; f < 30; ++f) {
    const double v = std::floor(rng.uniform(0.0, 6.0)) / 6.0 + 0.05;
    Tensor amap(1, 8, 8);
    amap.fill(v);
    const bool abnormal = rng.next_double() < 0.5;
    scores.push_back(v);
    labels.push_back(abnormal);
    if (abnormal)
      fx.add_abnormal(std::move(amap), std::vector<std::uint8_t>(64, 1));
    else
      fx.add_normal(std::move(amap));
  }
  labels[0] = 1;
  labels[1] = 0;
  fx.masks[0] = std::vector<std::uint8_t>(64, 1);
  fx.masks[1] = {};
  eval::RocCurve px = eval::pixel_level_roc(fx.finish(8, 8));
  eval::RocCurve fr = eval::frame_level_roc(scores, labels);
  CHECK(eval::auc(px) == doctest::Approx(eval::auc(fr)).epsilon(1e-12));
  CHECK(eval::eer(px) == doctest::Approx(eval::eer(fr)).epsilon(1e-9));
}

TEST_CASE("align_video duplicates the terminal frame") {
  data::GroundTruth gt;
  gt.frame_labels = {0, 0, 1, 1};
  gt.pixel_masks.resize(4);
  gt.mask_h = 4;
  gt.mask_w = 4;
  gt.pixel_masks[2].assign(16, 1);
  gt.pixel_masks[3].assign(16, 1);

  std::vector<Tensor> maps;
  for (int t = 0; t < 3; ++t) {
    Tensor m(1, 4, 4);
    m.fill(0.1 * (t + 1));
    maps.push_back(std::move(m));
  }
  eval::AlignedVideo av = eval::align_video(maps, gt);
  REQUIRE(av.scores.size() == 4);
  CHECK(av.scores[3] == av.scores[2]);
  CHECK(av.labels[3] == av.labels[2]);
  CHECK(av.frames[3].map == av.frames[2].map);

  // Equal-length inputs align one-to-one.
  maps.emplace_back();
  maps.back() = Tensor(1, 4, 4);
  eval::AlignedVideo av2 = eval::align_video(maps, gt);
  CHECK(av2.scores.size() == 4);
  CHECK(av2.scores[3] == 0.0);

  maps.emplace_back();
  maps.back() = Tensor(1, 4, 4);
  CHECK_THROWS_AS(eval::align_video(maps, gt), Error);
}

TEST_CASE("evaluate pools videos and reports per-video metrics") {
  std::vector<Tensor> v1, v2;
  data::GroundTruth g1, g2;
  g1.mask_h = g2.mask_h = 4;
  g1.mask_w = g2.mask_w = 4;
  Rng rng(51);
  for (int t = 0; t < 9; ++t) {
    Tensor m(1, 4, 4);
    m.fill(rng.uniform(0.0, 0.5));
    const bool abnormal = t >= 5;
    if (abnormal) {
      m.at(0, 1, 1) = 0.8 + 0.01 * t;
      g1.pixel_masks.push_back(std::vector<std::uint8_t>(16, 0));
      g1.pixel_masks.back()[5] = 1;
    } else {
      g1.pixel_masks.emplace_back();
    }
    g1.frame_labels.push_back(abnormal);
    v1.push_back(std::move(m));
  }
  g1.frame_labels.push_back(1);  // terminal frame inherits the last map
  g1.pixel_masks.push_back(g1.pixel_masks.back());
  // second video: all normal frames (single class -> undefined per-video)
  for (int t = 0; t < 5; ++t) {
    Tensor m(1, 4, 4);
    m.fill(rng.uniform(0.0, 0.3));
    g2.pixel_masks.emplace_back();
    g2.frame_labels.push_back(0);
    v2.push_back(std::move(m));
  }
  g2.frame_labels.push_back(0);
  g2.pixel_masks.emplace_back();

  std::vector<eval::EvaluationInput> inputs = {{"Test001", &v1, &g1},
                                               {"Test002", &v2, &g2}};
  eval::MetricReport fr = eval::evaluate(inputs, eval::Protocol::FrameLevel);
  CHECK(fr.auc > 0.9);  // abnormal frames were given distinctly higher maxima
  REQUIRE(fr.per_video.size() == 2);
  CHECK(fr.per_video[0].defined);
  CHECK_FALSE(fr.per_video[1].defined);

  eval::MetricReport px = eval::evaluate(inputs, eval::Protocol::PixelLevel);
  CHECK(px.auc > 0.9);
}
