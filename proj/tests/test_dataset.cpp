// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ganom/dataset.hpp"
#include "ganom/error.hpp"
#include "ganom/image.hpp"

using namespace ganom;
namespace fs = std::filesystem;

namespace {

data::SyntheticSpec small_spec() {
  data::SyntheticSpec s;
  s.height = 48;
  s.width = 48;
  s.n_train_videos = 2;
  s.n_test_videos = 2;
  s.frames_per_video = 12;
  s.agent_count = 3;
  s.normal_speed = 1.0;
  s.anomaly_speed_multiplier = 3.0;
  s.seed = 7;
  return s;
}

data::Frame tiny_frame(int idx) {
  data::Frame f;
  f.h = 8;
  f.w = 8;
  f.index = idx;
  f.rgb.assign(8 * 8 * 3, static_cast<std::uint8_t>(idx));
  return f;
}

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool frames_equal(const data::Frame& a, const data::Frame& b) {
  return a.h == b.h && a.w == b.w && a.rgb == b.rgb;
}

// Independent re-rendering of an agent's occupied pixels from its track.
std::vector<std::uint8_t> analytic_mask(const data::AgentTrack& a,
                                        const data::SyntheticSpec& spec,
                                        int t) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(spec.height) * spec.width, 0);
  double x, y;
  if (!data::agent_rect_at(a, spec, t, &x, &y)) return mask;
  for (int py = 0; py < spec.height; ++py)
    for (int px = -spec.width; px < 2 * spec.width; ++px) {
      const double ox =
          std::min(x + a.aw, px + 1.0) - std::max(x, static_cast<double>(px));
      const double oy =
          std::min(y + a.ah, py + 1.0) - std::max(y, static_cast<double>(py));
      if (ox <= 0 || oy <= 0) continue;
      if (std::min(ox, 1.0) * std::min(oy, 1.0) < 0.5) continue;
      int wx = px;
      if (a.wraps)
        wx = ((px % spec.width) + spec.width) % spec.width;
      else if (px < 0 || px >= spec.width)
        continue;
      mask[static_cast<std::size_t>(py) * spec.width + wx] = 1;
    }
  return mask;
}

}  // namespace

TEST_CASE("synthetic corpus is a pure function of the spec") {
  data::SyntheticSpec spec = small_spec();
  data::DatasetSplit a = data::generate_synthetic_corpus(spec);
  data::DatasetSplit b = data::generate_synthetic_corpus(spec);
  REQUIRE(a.train.size() == b.train.size());
  REQUIRE(a.test.size() == b.test.size());
  for (std::size_t v = 0; v < a.train.size(); ++v)
    for (std::size_t t = 0; t < a.train[v].frames.size(); ++t)
      CHECK(frames_equal(a.train[v].frames[t], b.train[v].frames[t]));
  for (std::size_t v = 0; v < a.test.size(); ++v) {
    CHECK(a.test[v].ground_truth->frame_labels ==
          b.test[v].ground_truth->frame_labels);
    CHECK(a.test[v].ground_truth->pixel_masks ==
          b.test[v].ground_truth->pixel_masks);
  }
}

TEST_CASE("fast mover displaces multiplier*speed px/frame; masks match the "
          "analytic trajectory") {
  data::SyntheticSpec spec = small_spec();
  data::DatasetSplit split = data::generate_synthetic_corpus(spec);
  for (int vi = 0; vi < spec.n_test_videos; ++vi) {
    data::VideoLayout layout = data::synth_video_layout(spec, true, vi);
    const data::AgentTrack& anom = layout.agents.back();
    REQUIRE(anom.anomalous);
    CHECK(anom.speed ==
          doctest::Approx(spec.normal_speed * spec.anomaly_speed_multiplier));
    double x0, y0, x1, y1;
    bool p0 = data::agent_rect_at(anom, spec, anom.enter + 1, &x0, &y0);
    bool p1 = data::agent_rect_at(anom, spec, anom.enter + 2, &x1, &y1);
    REQUIRE(p0);
    REQUIRE(p1);
    CHECK(x1 - x0 == doctest::Approx(3.0));
    CHECK(y1 == doctest::Approx(y0));

    const data::GroundTruth& gt = *split.test[vi].ground_truth;
    for (int t = 0; t < spec.frames_per_video; ++t) {
      std::vector<std::uint8_t> expect = analytic_mask(anom, spec, t);
      const bool nonempty =
          std::any_of(expect.begin(), expect.end(), [](auto m) { return m; });
      CHECK(gt.frame_labels[t] == (nonempty ? 1 : 0));
      if (nonempty)
        CHECK(gt.pixel_masks[t] == expect);
      else
        CHECK(gt.pixel_masks[t].empty());
    }
  }
}

TEST_CASE("every synthetic frame label equals mask-nonempty") {
  data::DatasetSplit split = data::generate_synthetic_corpus(small_spec());
  for (const auto& v : split.test) {
    REQUIRE(v.ground_truth);
    const auto& gt = *v.ground_truth;
    for (std::size_t t = 0; t < gt.frame_labels.size(); ++t) {
      const bool nonempty = !gt.pixel_masks[t].empty();
      CHECK(static_cast<bool>(gt.frame_labels[t]) == nonempty);
    }
  }
}

TEST_CASE("synthetic spec validation") {
  data::SyntheticSpec spec = small_spec();
  spec.frames_per_video = 1;
  CHECK_THROWS_AS(data::generate_synthetic_corpus(spec), Error);
  spec = small_spec();
  spec.n_test_videos = 0;
  data::DatasetSplit split = data::generate_synthetic_corpus(spec);
  CHECK(split.test.empty());
  CHECK(split.train.size() == 2);
  spec = small_spec();
  spec.anomaly_speed_multiplier = 1.0;
  CHECK_THROWS_AS(data::generate_synthetic_corpus(spec), Error);
}

TEST_CASE("pair_frames yields T-1 consecutive pairs") {
  data::VideoSequence v;
  v.id = "v";
  for (int t = 0; t < 2; ++t) v.frames.push_back(tiny_frame(t));
  CHECK(data::pair_frames(v).size() == 1);

  v.frames.clear();
  for (int t = 0; t < 200; ++t) v.frames.push_back(tiny_frame(t % 251));
  auto pairs = data::pair_frames(v);
  REQUIRE(pairs.size() == 199);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CHECK(pairs[k].first == &v.frames[k]);
    CHECK(pairs[k].second == &v.frames[k + 1]);
  }

  v.frames.resize(1);
  try {
    data::pair_frames(v);
    FAIL("expected degenerate-video error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateVideo);
  }
}

TEST_CASE("write then load round-trips a synthetic corpus") {
  fs::path root = temp_dir("ganom_ds_roundtrip");
  data::SyntheticSpec spec = small_spec();
  data::DatasetSplit split = data::generate_synthetic_corpus(spec);
  data::write_corpus(split, &spec, root);

  data::DatasetSplit loaded = data::load_ucsd_layout(root);
  REQUIRE(loaded.train.size() == split.train.size());
  REQUIRE(loaded.test.size() == split.test.size());
  CHECK_FALSE(loaded.gt_warning);
  for (std::size_t v = 0; v < split.train.size(); ++v) {
    REQUIRE(loaded.train[v].frames.size() == split.train[v].frames.size());
    for (std::size_t t = 0; t < split.train[v].frames.size(); ++t) {
      CHECK(frames_equal(loaded.train[v].frames[t], split.train[v].frames[t]));
      CHECK(loaded.train[v].frames[t].index == static_cast<int>(t));
    }
  }
  for (std::size_t v = 0; v < split.test.size(); ++v) {
    REQUIRE(loaded.test[v].ground_truth);
    CHECK(loaded.test[v].ground_truth->frame_labels ==
          split.test[v].ground_truth->frame_labels);
    for (std::size_t t = 0; t < split.test[v].frames.size(); ++t)
      CHECK(loaded.test[v].ground_truth->pixel_masks[t] ==
            split.test[v].ground_truth->pixel_masks[t]);
  }

  auto side = data::read_spec_sidecar(root);
  REQUIRE(side);
  CHECK(side->seed == spec.seed);
  CHECK(side->anomaly_type == spec.anomaly_type);
  fs::remove_all(root);
}

TEST_CASE("ucsd loader handles a Ped1-sized tree") {
  fs::path root = temp_dir("ganom_ds_ped1");
  data::DatasetSplit synth;
  char buf[32];
  for (int i = 0; i < 34; ++i) {
    data::VideoSequence v;
    std::snprintf(buf, sizeof buf, "Train%03d", i + 1);
    v.id = buf;
    for (int t = 0; t < 2; ++t) v.frames.push_back(tiny_frame(t));
    synth.train.push_back(std::move(v));
  }
  for (int i = 0; i < 16; ++i) {
    data::VideoSequence v;
    std::snprintf(buf, sizeof buf, "Test%03d", i + 1);
    v.id = buf;
    for (int t = 0; t < 2; ++t) v.frames.push_back(tiny_frame(t));
    synth.test.push_back(std::move(v));
  }
  data::write_corpus(synth, nullptr, root);
  data::DatasetSplit loaded = data::load_ucsd_layout(root);
  CHECK(loaded.train.size() == 34);
  CHECK(loaded.test.size() == 16);
  // No masks or labels on disk: loading succeeds with the warning flag.
  CHECK(loaded.gt_warning);
  fs::remove_all(root);
}

TEST_CASE("loader configuration errors") {
  CHECK_THROWS_AS(data::load_ucsd_layout("/nonexistent/ganom/root"), Error);

  fs::path root = temp_dir("ganom_ds_empty");
  fs::create_directories(root / "Train");
  try {
    data::load_ucsd_layout(root);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  fs::remove_all(root);
}

TEST_CASE("label file contradicting a nonempty mask is rejected") {
  fs::path root = temp_dir("ganom_ds_contradict");
  data::SyntheticSpec spec = small_spec();
  spec.n_train_videos = 1;
  spec.n_test_videos = 1;
  data::DatasetSplit split = data::generate_synthetic_corpus(spec);
  data::write_corpus(split, nullptr, root);
  {
    std::ofstream out(root / "Test" / "Test001_gt.txt");
    for (std::size_t t = 0; t < split.test[0].frames.size(); ++t) out << "0\n";
  }
  try {
    data::load_ucsd_layout(root);
    FAIL("expected format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
  fs::remove_all(root);
}
