// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ganom/tensor.hpp"

namespace ganom::core {

// Runtime switch for the OpenMP kernels. The parallel variants write
// disjoint output rows and keep a fixed per-element accumulation order, so
// results are bit-identical to the serial reference for any thread count.
void set_parallel(bool on);
bool parallel_enabled();
void set_threads(int n);
int thread_count();

template <class F>
inline void for_each_row(int n, F&& f) {
  if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) f(i);
  } else {
    for (int i = 0; i < n; ++i) f(i);
  }
}

// 2D convolution, weights [out_c][in_c][k][k] row-major, zero padding.
struct ConvSpec {
  int in_c = 0;
  int out_c = 0;
  int k = 4;
  int stride = 2;
  int pad = 1;
};

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
inline int deconv_out_dim(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

// y = conv(x, w) + b. y must be presized to (out_c, oh, ow).
void conv2d_forward(const Tensor& x, const ConvSpec& cs, const double* w,
                    const double* b, Tensor& y);

// dx = full correlation of dy with w (gradient w.r.t. the conv input).
// dx must be presized to the conv input shape. Also the forward pass of a
// transposed convolution when w is viewed as [in_c(T)][out_c(T)][k][k].
void conv2d_backward_input(const Tensor& dy, const ConvSpec& cs,
                           const double* w, Tensor& dx);

// Accumulates (+=) weight and bias gradients.
void conv2d_backward_weights(const Tensor& x, const Tensor& dy,
                             const ConvSpec& cs, double* dw, double* db);

// Separable bilinear resize with corner alignment (endpoints preserved).
void resize_bilinear(const Tensor& src, int oh, int ow, Tensor& dst);

// Plain serial implementations kept as the reference the parallel kernels
// are tested (and benchmarked) against. Accumulation order matches the
// parallel variants, so equality is exact.
namespace ref {
void conv2d_forward(const Tensor& x, const ConvSpec& cs, const double* w,
                    const double* b, Tensor& y);
void conv2d_backward_input(const Tensor& dy, const ConvSpec& cs,
                           const double* w, Tensor& dx);
void conv2d_backward_weights(const Tensor& x, const Tensor& dy,
                             const ConvSpec& cs, double* dw, double* db);
void resize_bilinear(const Tensor& src, int oh, int ow, Tensor& dst);
}  // namespace ref

}  // namespace ganom::core
