// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/perception.hpp"

#include <algorithm>

#include "ganom/error.hpp"

namespace ganom::percept {

namespace {

// Two passes of a normalized [1 2 1] binomial, replicate borders. Linear
// and constant-preserving.
Tensor smooth(const Tensor& x) {
  Tensor tmp(x.c, x.h, x.w), out(x.c, x.h, x.w);
  for (int pass = 0; pass < 2; ++pass) {
    const Tensor& src = pass == 0 ? x : out;
    for (int c = 0; c < x.c; ++c) {
      const double* sp = src.plane(c);
      double* tp = tmp.plane(c);
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          const int xm = std::max(0, xx - 1), xp = std::min(x.w - 1, xx + 1);
          const double* row = sp + static_cast<std::size_t>(y) * x.w;
          tp[static_cast<std::size_t>(y) * x.w + xx] =
              0.25 * row[xm] + 0.5 * row[xx] + 0.25 * row[xp];
        }
      double* op = out.plane(c);
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          const int ym = std::max(0, y - 1), yp = std::min(x.h - 1, y + 1);
          op[static_cast<std::size_t>(y) * x.w + xx] =
              0.25 * tp[static_cast<std::size_t>(ym) * x.w + xx] +
              0.5 * tp[static_cast<std::size_t>(y) * x.w + xx] +
              0.25 * tp[static_cast<std::size_t>(yp) * x.w + xx];
        }
    }
  }
  return out;
}

Tensor avg_pool(const Tensor& x, int stride) {
  const int oh = (x.h + stride - 1) / stride;
  const int ow = (x.w + stride - 1) / stride;
  Tensor out(x.c, oh, ow);
  for (int c = 0; c < x.c; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const int y0 = oy * stride, x0 = ox * stride;
        const int y1 = std::min(x.h, y0 + stride);
        const int x1 = std::min(x.w, x0 + stride);
        double acc = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int xx = x0; xx < x1; ++xx) acc += x.at(c, y, xx);
        out.at(c, oy, ox) = acc / ((y1 - y0) * (x1 - x0));
      }
  return out;
}

class TestDoubleExtractor final : public FeatureExtractor {
 public:
  std::string id() const override { return "testdouble-s8c3"; }
  int stride() const override { return 8; }
  int channels() const override { return 3; }

  Tensor extract(const Tensor& image) const override {
    if (image.c != 3)
      fail(ErrorKind::Shape, "feature extractor expects a 3-channel image");
    return avg_pool(smooth(image), stride());
  }
};

}  // namespace

std::unique_ptr<FeatureExtractor> test_double_extractor() {
  return std::make_unique<TestDoubleExtractor>();
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& key) {
  if (key.empty() || key == "testdouble") return test_double_extractor();
  fail(ErrorKind::Config,
       "unknown feature extractor '" + key + "' (available: testdouble)");
}

}  // namespace ganom::percept
