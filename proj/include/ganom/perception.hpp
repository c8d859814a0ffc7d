// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "ganom/tensor.hpp"

namespace ganom::percept {

// Frozen semantic feature map h(.) for the appearance channel. Input is a
// 3-channel image in [0,1]; output is (channels, ceil(H/stride),
// ceil(W/stride)). Implementations are deterministic and never trained.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int stride() const = 0;
  virtual int channels() const = 0;
  virtual Tensor extract(const Tensor& image) const = 0;
};

// Weight-free extractor (fixed binomial smoothing + average pooling,
// stride 8, 3 channels). Linear by construction; keeps the test suite and
// offline runs independent of any pretrained backbone download.
std::unique_ptr<FeatureExtractor> test_double_extractor();

// Extractor registry keyed by config name ("testdouble" is the default and
// the only built-in; pretrained backbones plug in behind the same
// interface).
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& key);

}  // namespace ganom::percept
