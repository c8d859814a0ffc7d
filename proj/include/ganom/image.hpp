// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "ganom/dataset.hpp"
#include "ganom/tensor.hpp"

namespace ganom::img {

data::Frame load_frame(const std::filesystem::path& path);
void save_frame_png(const data::Frame& f, const std::filesystem::path& path);

// Mask files: any nonzero pixel marks an abnormal location.
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int* h,
                                    int* w);
void save_mask_png(const std::vector<std::uint8_t>& mask, int h, int w,
                   const std::filesystem::path& path);

// Single-channel map rendered with a fixed heat palette; values are scaled
// by 1/scale before colouring.
void save_heatmap_png(const Tensor& map, double scale,
                      const std::filesystem::path& path);

// Source frame with red tint where map >= threshold.
void save_overlay_png(const data::Frame& frame, const Tensor& map,
                      double threshold, const std::filesystem::path& path);

// Frame <-> tensor conversions. "unit" is [0,1], "model" is [-1,1].
Tensor frame_to_unit(const data::Frame& f);
Tensor unit_to_model(const Tensor& t);
Tensor model_to_unit(const Tensor& t);
data::Frame unit_to_frame(const Tensor& t);

}  // namespace ganom::img
