// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ganom::data {

// One RGB video frame at source resolution (interleaved, 8-bit).
struct Frame {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> rgb;  // h*w*3
  int index = 0;
  std::string video_id;

  std::uint8_t* px(int y, int x) { return rgb.data() + (static_cast<std::size_t>(y) * w + x) * 3; }
  const std::uint8_t* px(int y, int x) const {
    return rgb.data() + (static_cast<std::size_t>(y) * w + x) * 3;
  }
};

struct GroundTruth {
  std::vector<std::uint8_t> frame_labels;  // 1 = abnormal
  // Per-frame boolean masks at source resolution; an empty vector means
  // "no abnormal pixels in this frame".
  std::vector<std::vector<std::uint8_t>> pixel_masks;
  int mask_h = 0;
  int mask_w = 0;

  bool has_masks() const {
    for (const auto& m : pixel_masks)
      if (!m.empty()) return true;
    return false;
  }
};

struct VideoSequence {
  std::string id;
  std::vector<Frame> frames;
  std::optional<GroundTruth> ground_truth;

  int height() const { return frames.empty() ? 0 : frames.front().h; }
  int width() const { return frames.empty() ? 0 : frames.front().w; }
};

struct DatasetSplit {
  std::vector<VideoSequence> train;
  std::vector<VideoSequence> test;
  // Set when a test video came without usable ground truth; evaluation
  // raises the error, loading does not.
  bool gt_warning = false;
};

enum class AnomalyType { FastMover, WrongDirection, LargeObject };

const char* anomaly_type_name(AnomalyType t);
AnomalyType anomaly_type_from_name(const std::string& name);

struct SyntheticSpec {
  int height = 64;
  int width = 64;
  int n_train_videos = 8;
  int n_test_videos = 4;
  int frames_per_video = 60;
  int agent_count = 5;
  double normal_speed = 1.0;  // px/frame
  AnomalyType anomaly_type = AnomalyType::FastMover;
  double anomaly_speed_multiplier = 3.0;
  std::uint64_t seed = 0;
};

void validate_spec(const SyntheticSpec& spec);

// Deterministic scene layout behind a synthetic video. Exposed so tests can
// recompute trajectories and masks analytically from the spec.
struct AgentTrack {
  double x0 = 0;       // left edge at first present frame
  double y0 = 0;       // top edge (fixed lane)
  double aw = 6;       // agent width in px
  double ah = 6;       // agent height in px
  double speed = 1;    // px/frame, signed
  double tone = 220;   // base gray level
  double amp = 40;     // stripe contrast
  int enter = 0;       // first frame the agent is present
  bool anomalous = false;
  bool wraps = true;   // normal agents wrap around; anomalies pass through
};

struct VideoLayout {
  std::uint64_t background_seed = 0;
  std::vector<AgentTrack> agents;  // anomalous agent, if any, is last
};

VideoLayout synth_video_layout(const SyntheticSpec& spec, bool is_test,
                               int video_index);

// Left/top edge of the agent rectangle at frame t; false when absent.
bool agent_rect_at(const AgentTrack& a, const SyntheticSpec& spec, int t,
                   double* x, double* y);

// Pure function of the spec: bit-identical output for equal specs.
DatasetSplit generate_synthetic_corpus(const SyntheticSpec& spec);

// UCSD-style tree: <root>/Train/TrainNNN/*.{tif,png,...},
// <root>/Test/TestNNN/..., masks in <root>/Test/TestNNN_gt/, optional
// frame labels in <root>/Test/TestNNN_gt.txt (one 0/1 per line).
DatasetSplit load_ucsd_layout(const std::filesystem::path& root);

// Writes a split in the UCSD layout (PNG frames); when spec is non-null a
// spec.json sidecar is recorded at the root.
void write_corpus(const DatasetSplit& split, const SyntheticSpec* spec,
                  const std::filesystem::path& root);

std::optional<SyntheticSpec> read_spec_sidecar(const std::filesystem::path& root);

// Consecutive (F_t, F_t+1) pairs; throws for videos too short for flow.
std::vector<std::pair<const Frame*, const Frame*>> pair_frames(
    const VideoSequence& video);

}  // namespace ganom::data
