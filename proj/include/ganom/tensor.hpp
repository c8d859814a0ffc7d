// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

#include "ganom/error.hpp"

namespace ganom {

// Channel-major (C,H,W) dense double tensor. All network math, flow fields
// and difference maps run in double so gradient checks and the determinism
// contract hold without surprises.
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_) {
    v.assign(static_cast<std::size_t>(c_) * h_ * w_, 0.0);
  }

  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return c == o.c && h == o.h && w == o.w;
  }

  double& at(int ci, int y, int x) {
    assert(ci >= 0 && ci < c && y >= 0 && y < h && x >= 0 && x < w);
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    assert(ci >= 0 && ci < c && y >= 0 && y < h && x >= 0 && x < w);
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  double* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
  const double* plane(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * h * w;
  }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  double max_value() const {
    double m = v.empty() ? 0.0 : v[0];
    for (double x : v) m = std::max(m, x);
    return m;
  }
};

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* what) {
  if (!a.same_shape(b))
    fail(ErrorKind::Shape, std::string(what) + ": tensor shapes differ");
}

}  // namespace ganom
