// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "ganom/dataset.hpp"
#include "ganom/gan.hpp"
#include "ganom/optflow.hpp"
#include "ganom/perception.hpp"
#include "ganom/tensor.hpp"
#include "ganom/trainer.hpp"

namespace ganom::det {

enum class DiffChannel { OpticalFlow, Semantic, SemanticUpsampled };

// Nonnegative per-pixel reconstruction discrepancy.
struct DifferenceMap {
  Tensor map;  // 1 x h x w
  DiffChannel channel = DiffChannel::OpticalFlow;
};

// Video-wide maxima used by the per-video normalization.
struct VideoNormalizer {
  double m_o = 0;
  double m_s = 0;
};

// Fused per-frame abnormality scores, resized to ground-truth resolution.
struct AbnormalityMap {
  Tensor map;  // 1 x H x W
  int frame_index = 0;
  double lambda = 2.0;
  VideoNormalizer normalizer;
};

// p_O = G_F2O(F). The checkpoint must carry the matching direction tag.
Tensor reconstruct_flow(const nn::GeneratorState& g, const Tensor& frame_model,
                        const nn::NoiseSource& noise);

// p_F = G_O2F(O).
Tensor reconstruct_frame(const nn::GeneratorState& g,
                         const Tensor& flow_model,
                         const nn::NoiseSource& noise);

// Sum over the three flow channels of absolute differences.
DifferenceMap flow_difference(const Tensor& o, const Tensor& p_o);

// Mean over feature channels of absolute differences; both maps must come
// from the same extractor.
DifferenceMap semantic_difference(const Tensor& h_f, const Tensor& h_pf,
                                  const std::string& prov_f,
                                  const std::string& prov_pf);

DifferenceMap upsample_map(const DifferenceMap& m, int th, int tw);

// Divides by the video-wide max; an all-zero video maps to all zeros.
std::pair<std::vector<Tensor>, double> normalize_per_video(
    const std::vector<DifferenceMap>& maps, DiffChannel channel);

AbnormalityMap fuse(const Tensor& n_s, const Tensor& n_o, double lambda);

struct DetectOptions {
  double lambda = 2.0;
  bool dropout = true;  // test-time noise source, seeded for reproducibility
  std::uint64_t seed = 0;
  bool keep_channels = false;  // retain per-channel N maps for ablations
  std::filesystem::path flow_cache_dir;
};

struct DetectResult {
  std::vector<AbnormalityMap> maps;  // T-1 maps, frame t uses flow (t, t+1)
  std::vector<Tensor> n_o;           // present when keep_channels
  std::vector<Tensor> n_s;
  VideoNormalizer normalizer;
};

// Full two-pass pipeline for one test video: reconstruction differences per
// frame, then video-wide normalization, fusion and resize to ground-truth
// resolution.
DetectResult detect_video(const data::VideoSequence& video,
                          const train::TrainerState& f2o,
                          const train::TrainerState& o2f,
                          const percept::FeatureExtractor& extractor,
                          const DetectOptions& opts);

// AMP1 container: magic "AMP1", u32 height, u32 width, row-major float32
// values (single-channel FLO1 sibling).
void write_map(const Tensor& map, const std::filesystem::path& path);
Tensor load_map(const std::filesystem::path& path);

}  // namespace ganom::det
