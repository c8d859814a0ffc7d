// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "ganom/dataset.hpp"
#include "ganom/tensor.hpp"

namespace ganom::flow {

// Dense displacement field in pixels/frame. Plane 0 is horizontal (u),
// plane 1 vertical (v). Values are float32-quantized so that freshly
// estimated and cache-loaded fields are bit-identical.
struct FlowField {
  Tensor uv;  // c = 2

  int h() const { return uv.h; }
  int w() const { return uv.w; }
};

struct FlowConfig {
  int levels = 0;        // pyramid levels; 0 = derived from image size
  int min_size = 12;     // coarsest level keeps at least this many pixels
  int warps = 3;         // warp iterations per level
  int iterations = 120;  // relaxation sweeps per warp
  double alpha = 0.5;    // smoothness weight
};

std::uint64_t flow_config_hash(const FlowConfig& cfg);

// Coarse-to-fine variational estimation (pyramidal Horn-Schunck with
// warping). Identical inputs give the exact zero field.
FlowField estimate_flow(const data::Frame& a, const data::Frame& b,
                        const FlowConfig& cfg);

// Per-channel affine map into the generator range [-1, 1]:
//   mapped = 2 * (raw - lo) / (hi - lo) - 1.
// Channels: 0 = u, 1 = v, 2 = magnitude.
struct FlowMapping {
  double lo[3] = {-1, -1, 0};
  double hi[3] = {1, 1, 1};
};

// Three mapped channels (horizontal, vertical, magnitude) plus the mapping
// needed to invert them.
struct FlowImage {
  Tensor channels;  // c = 3
  FlowMapping mapping;
};

FlowImage encode_flow(const FlowField& f, const FlowMapping& mapping);
FlowField decode_flow(const FlowImage& img);

// Accumulates raw flow samples and freezes a 1st/99th percentile mapping.
class MappingEstimator {
 public:
  void add(const FlowField& f);
  FlowMapping finish() const;

 private:
  std::vector<double> u_, v_, mag_;
};

// Bilinear resize with u, v rescaled so displacements stay in units of the
// resized grid.
FlowField resize_flow(const FlowField& f, int oh, int ow);

// FLO1 container: magic "FLO1", u32 height, u32 width, then row-major
// float32 u values followed by float32 v values, little-endian.
void write_flow(const FlowField& f, const std::filesystem::path& path);
FlowField load_precomputed_flow(const std::filesystem::path& path);

}  // namespace ganom::flow
