// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ganom/dataset.hpp"
#include "ganom/error.hpp"
#include "ganom/rng.hpp"

namespace ganom::data {

namespace {

// Smooth value-noise background, shared by every video of a corpus so the
// scene is stationary the way a surveillance camera is.
std::vector<double> make_background(std::uint64_t seed, int h, int w) {
  Rng rng(seed);
  const int cell = 8;
  const int gh = h / cell + 2, gw = w / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
  for (double& g : grid) g = rng.uniform(70.0, 170.0);
  std::vector<double> bg(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double fy = static_cast<double>(y) / cell, fx = static_cast<double>(x) / cell;
      int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
      double wy = fy - y0, wx = fx - x0;
      auto g = [&](int yy, int xx) { return grid[static_cast<std::size_t>(yy) * gw + xx]; };
      double top = g(y0, x0) * (1 - wx) + g(y0, x0 + 1) * wx;
      double bot = g(y0 + 1, x0) * (1 - wx) + g(y0 + 1, x0 + 1) * wx;
      bg[static_cast<std::size_t>(y) * w + x] = top * (1 - wy) + bot * wy;
    }
  // Fine-grained texture so the flow estimator has gradients everywhere.
  Rng fine(mix_seed(seed, "fine"));
  for (double& v : bg) v += fine.uniform(-9.0, 9.0);
  return bg;
}

double agent_tone_at(const AgentTrack& a, double local_x) {
  return a.tone + a.amp * std::sin(2.0 * std::numbers::pi * local_x / 3.7);
}

// Axis-aligned coverage of pixel (px,py) by rect (x..x+aw, y..y+ah).
double coverage(double x, double y, double aw, double ah, int px, int py) {
  double ox = std::min(x + aw, px + 1.0) - std::max(x, static_cast<double>(px));
  double oy = std::min(y + ah, py + 1.0) - std::max(y, static_cast<double>(py));
  if (ox <= 0 || oy <= 0) return 0.0;
  return std::min(ox, 1.0) * std::min(oy, 1.0);
}

void blend_agent(Frame& f, const AgentTrack& a, double x, double y) {
  const int x_lo = static_cast<int>(std::floor(x)) - 1;
  const int x_hi = static_cast<int>(std::ceil(x + a.aw)) + 1;
  const int y_lo = std::max(0, static_cast<int>(std::floor(y)) - 1);
  const int y_hi = std::min(f.h, static_cast<int>(std::ceil(y + a.ah)) + 1);
  for (int py = y_lo; py < y_hi; ++py)
    for (int px = x_lo; px < x_hi; ++px) {
      double alpha = coverage(x, y, a.aw, a.ah, px, py);
      if (alpha <= 0) continue;
      int wx = px;
      if (a.wraps) {
        wx = ((px % f.w) + f.w) % f.w;
      } else if (px < 0 || px >= f.w) {
        continue;
      }
      double tone = agent_tone_at(a, px - x);
      auto* p = f.px(py, wx);
      for (int c = 0; c < 3; ++c) {
        double v = p[c] * (1.0 - alpha) + tone * alpha;
        p[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
      }
    }
}

void mask_agent(std::vector<std::uint8_t>& mask, int h, int w,
                const AgentTrack& a, double x, double y) {
  const int x_lo = static_cast<int>(std::floor(x)) - 1;
  const int x_hi = static_cast<int>(std::ceil(x + a.aw)) + 1;
  const int y_lo = std::max(0, static_cast<int>(std::floor(y)) - 1);
  const int y_hi = std::min(h, static_cast<int>(std::ceil(y + a.ah)) + 1);
  for (int py = y_lo; py < y_hi; ++py)
    for (int px = x_lo; px < x_hi; ++px) {
      if (coverage(x, y, a.aw, a.ah, px, py) < 0.5) continue;
      int wx = px;
      if (a.wraps) {
        wx = ((px % w) + w) % w;
      } else if (px < 0 || px >= w) {
        continue;
      }
      mask[static_cast<std::size_t>(py) * w + wx] = 1;
    }
}

}  // namespace

const char* anomaly_type_name(AnomalyType t) {
  switch (t) {
    case AnomalyType::FastMover: return "fast_mover";
    case AnomalyType::WrongDirection: return "wrong_direction";
    case AnomalyType::LargeObject: return "large_object";
  }
  return "fast_mover";
}

AnomalyType anomaly_type_from_name(const std::string& name) {
  if (name == "fast_mover") return AnomalyType::FastMover;
  if (name == "wrong_direction") return AnomalyType::WrongDirection;
  if (name == "large_object") return AnomalyType::LargeObject;
  fail(ErrorKind::Config, "unknown anomaly type: " + name);
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.height < 8 || spec.width < 8)
    fail(ErrorKind::Config, "synthetic resolution must be at least 8x8");
  if (spec.frames_per_video < 2)
    fail(ErrorKind::Config, "frames_per_video must be >= 2 (flow needs pairs)");
  if (spec.n_train_videos < 1)
    fail(ErrorKind::Config, "need at least one train video");
  if (spec.agent_count < 1)
    fail(ErrorKind::Config, "agent_count must be >= 1");
  if (spec.normal_speed <= 0)
    fail(ErrorKind::Config, "normal_speed must be positive");
  if (spec.anomaly_type == AnomalyType::FastMover &&
      spec.anomaly_speed_multiplier <= 1.0)
    fail(ErrorKind::Config, "fast_mover needs anomaly_speed_multiplier > 1");
}

bool agent_rect_at(const AgentTrack& a, const SyntheticSpec& spec, int t,
                   double* x, double* y) {
  if (t < a.enter) return false;
  double xt = a.x0 + a.speed * (t - a.enter);
  if (a.wraps) {
    xt = std::fmod(xt, static_cast<double>(spec.width));
    if (xt < 0) xt += spec.width;
  } else if (xt + a.aw <= 0 || xt >= spec.width) {
    return false;
  }
  *x = xt;
  *y = a.y0;
  return true;
}

VideoLayout synth_video_layout(const SyntheticSpec& spec, bool is_test,
                               int video_index) {
  validate_spec(spec);
  VideoLayout layout;
  layout.background_seed = mix_seed(spec.seed, "background");
  Rng rng(mix_seed(spec.seed, is_test ? "test-video" : "train-video",
                   static_cast<std::uint64_t>(video_index)));
  const double lane_h = static_cast<double>(spec.height) / spec.agent_count;
  const double base_size =
      std::clamp(spec.height / 10.0, 4.0, std::max(4.0, lane_h * 0.55));
  for (int i = 0; i < spec.agent_count; ++i) {
    AgentTrack a;
    a.aw = base_size + rng.uniform(-1.0, 1.5);
    a.ah = base_size + rng.uniform(-1.0, 1.5);
    a.y0 = (i + 0.5) * lane_h - a.ah / 2.0 + rng.uniform(-1.0, 1.0);
    a.y0 = std::clamp(a.y0, 0.0, spec.height - a.ah);
    a.x0 = rng.uniform(0.0, static_cast<double>(spec.width));
    a.speed = spec.normal_speed;
    a.tone = (i % 2 == 0) ? rng.uniform(200.0, 250.0) : rng.uniform(5.0, 55.0);
    a.amp = rng.uniform(20.0, 50.0);
    layout.agents.push_back(a);
  }
  if (is_test) {
    AgentTrack a;
    a.anomalous = true;
    a.wraps = false;
    a.enter = spec.frames_per_video / 3;
    a.aw = base_size;
    a.ah = base_size;
    // The anomaly travels between two normal lanes.
    int lane = static_cast<int>(rng.next_below(
        static_cast<std::uint64_t>(std::max(1, spec.agent_count - 1))));
    a.y0 = std::clamp((lane + 1.0) * lane_h - a.ah / 2.0, 0.0,
                      spec.height - a.ah);
    a.tone = rng.uniform(200.0, 250.0);
    a.amp = rng.uniform(20.0, 50.0);
    switch (spec.anomaly_type) {
      case AnomalyType::FastMover:
        a.speed = spec.normal_speed * spec.anomaly_speed_multiplier;
        a.x0 = -a.aw;
        break;
      case AnomalyType::WrongDirection:
        a.speed = -spec.normal_speed;
        a.x0 = spec.width;
        break;
      case AnomalyType::LargeObject:
        a.speed = spec.normal_speed;
        a.aw = base_size * 3.0;
        a.ah = std::min(base_size * 3.0, spec.height - a.y0);
        a.x0 = -a.aw;
        break;
    }
    layout.agents.push_back(a);
  }
  return layout;
}

DatasetSplit generate_synthetic_corpus(const SyntheticSpec& spec) {
  validate_spec(spec);
  DatasetSplit split;
  const std::vector<double> bg =
      make_background(mix_seed(spec.seed, "background"), spec.height, spec.width);

  auto render_video = [&](bool is_test, int idx) {
    VideoLayout layout = synth_video_layout(spec, is_test, idx);
    VideoSequence video;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", is_test ? "Test" : "Train",
                  idx + 1);
    video.id = buf;
    GroundTruth gt;
    gt.mask_h = spec.height;
    gt.mask_w = spec.width;
    for (int t = 0; t < spec.frames_per_video; ++t) {
      Frame f;
      f.h = spec.height;
      f.w = spec.width;
      f.index = t;
      f.video_id = video.id;
      f.rgb.resize(static_cast<std::size_t>(f.h) * f.w * 3);
      for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
          double v = bg[static_cast<std::size_t>(y) * f.w + x];
          auto* p = f.px(y, x);
          p[0] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
          p[1] = static_cast<std::uint8_t>(std::clamp(std::lround(v * 0.97), 0l, 255l));
          p[2] = static_cast<std::uint8_t>(std::clamp(std::lround(v * 0.94), 0l, 255l));
        }
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(f.h) * f.w, 0);
      bool any_anomaly = false;
      for (const AgentTrack& a : layout.agents) {
        double x, y;
        if (!agent_rect_at(a, spec, t, &x, &y)) continue;
        blend_agent(f, a, x, y);
        if (a.anomalous) {
          mask_agent(mask, f.h, f.w, a, x, y);
          any_anomaly = true;
        }
      }
      bool mask_nonempty =
          std::any_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m; });
      (void)any_anomaly;
      gt.frame_labels.push_back(mask_nonempty ? 1 : 0);
      gt.pixel_masks.push_back(mask_nonempty ? std::move(mask)
                                             : std::vector<std::uint8_t>());
      video.frames.push_back(std::move(f));
    }
    if (is_test) video.ground_truth = std::move(gt);
    return video;
  };

  for (int i = 0; i < spec.n_train_videos; ++i)
    split.train.push_back(render_video(false, i));
  for (int i = 0; i < spec.n_test_videos; ++i)
    split.test.push_back(render_video(true, i));
  return split;
}

}  // namespace ganom::data
