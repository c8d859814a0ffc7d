// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ganom/dataset.hpp"
#include "ganom/detector.hpp"
#include "ganom/tensor.hpp"

namespace ganom::eval {

enum class Protocol { FrameLevel, PixelLevel };
const char* protocol_name(Protocol p);

struct RocPoint {
  double threshold = 0;  // +/-infinity on the analytic endpoints
  double fpr = 0;
  double tpr = 0;
};

// Points ordered by nondecreasing FPR, endpoints at FPR 0 and 1 included.
struct RocCurve {
  std::vector<RocPoint> points;
};

// Frame score = max over pixels; thresholding the max is equivalent to
// "at least one pixel above threshold".
std::vector<double> frame_scores(const std::vector<det::AbnormalityMap>& maps);

// Exact ROC: thresholds are the sorted unique scores plus analytic
// endpoints. Throws UndefinedMetric unless both classes are present.
RocCurve frame_level_roc(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels);

// One evaluated frame of the pixel-level protocol. Mask may be null for
// normal frames; abnormal frames must carry one.
struct EvalFrame {
  const Tensor* map = nullptr;
  bool label = false;
  const std::vector<std::uint8_t>* mask = nullptr;
  int mask_h = 0;
  int mask_w = 0;
};

struct PixelRocOptions {
  // An abnormal frame with detections covering under 40% of the ground
  // truth counts as a false positive (the quoted convention); disable to
  // count such frames as plain misses.
  bool failed_overlap_counts_fp = true;
};

// 40% rule, inclusive boundary, integer arithmetic (5*covered >= 2*|GT|).
bool covers_enough(std::size_t covered, std::size_t gt_size);

RocCurve pixel_level_roc(const std::vector<EvalFrame>& frames,
                         const PixelRocOptions& opts = {});

double auc(const RocCurve& curve);
double eer(const RocCurve& curve);

// Detection yields T-1 maps for frames 0..T-2; the terminal frame of each
// video duplicates the last map's (score, label, mask) for alignment with
// the T ground-truth entries.
struct AlignedVideo {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<EvalFrame> frames;  // pointers into the caller's maps/gt
};

AlignedVideo align_video(const std::vector<Tensor>& maps,
                         const data::GroundTruth& gt);

struct VideoMetrics {
  std::string video;
  double auc = 0;
  double eer = 0;
  bool defined = false;  // false when the video has a single class
};

struct MetricReport {
  Protocol protocol = Protocol::FrameLevel;
  double auc = 0;
  double eer = 0;
  std::vector<VideoMetrics> per_video;
};

struct EvaluationInput {
  std::string video_id;
  const std::vector<Tensor>* maps = nullptr;  // A at ground-truth resolution
  const data::GroundTruth* gt = nullptr;
};

MetricReport evaluate(const std::vector<EvaluationInput>& inputs,
                      Protocol protocol, const PixelRocOptions& opts = {});

void write_report_csv(const std::vector<MetricReport>& reports,
                      const std::string& dataset,
                      const std::filesystem::path& path);
void write_summary_json(const std::vector<MetricReport>& reports,
                        const std::string& dataset,
                        const std::filesystem::path& path);
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

}  // namespace ganom::eval
