// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against the serial reference implementations.

#include <chrono>
#include <cstdio>
#include <functional>

#include "ganom/kernels.hpp"
#include "ganom/rng.hpp"
#include "ganom/tensor.hpp"

using namespace ganom;

namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  Tensor t(c, h, w);
  Rng rng(seed);
  for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
  return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms);
}

void bench_conv(int res, int in_c, int out_c, int reps) {
  core::ConvSpec cs{in_c, out_c, 4, 2, 1};
  Tensor x = random_tensor(in_c, res, res, 1);
  std::vector<double> w(static_cast<std::size_t>(in_c) * out_c * 16);
  std::vector<double> b(out_c, 0.0);
  Rng rng(2);
  for (double& v : w) v = rng.normal(0.0, 0.02);
  const int oh = core::conv_out_dim(res, 4, 2, 1);
  Tensor y(out_c, oh, oh), dx(in_c, res, res);
  std::vector<double> dw(w.size(), 0.0), db(out_c, 0.0);

  char label[64];
  std::snprintf(label, sizeof label, "conv_fwd %dx%d %d->%d", res, res, in_c,
                out_c);
  double s = time_ms([&] { core::ref::conv2d_forward(x, cs, w.data(), b.data(), y); }, reps);
  double p = time_ms([&] { core::conv2d_forward(x, cs, w.data(), b.data(), y); }, reps);
  report(label, s, p);

  std::snprintf(label, sizeof label, "conv_bwd_input %dx%d", res, res);
  s = time_ms([&] { core::ref::conv2d_backward_input(y, cs, w.data(), dx); }, reps);
  p = time_ms([&] { core::conv2d_backward_input(y, cs, w.data(), dx); }, reps);
  report(label, s, p);

  std::snprintf(label, sizeof label, "conv_bwd_weights %dx%d", res, res);
  s = time_ms([&] { core::ref::conv2d_backward_weights(x, y, cs, dw.data(), db.data()); }, reps);
  p = time_ms([&] { core::conv2d_backward_weights(x, y, cs, dw.data(), db.data()); }, reps);
  report(label, s, p);
}

void bench_resize(int from, int to, int reps) {
  Tensor x = random_tensor(3, from, from, 3);
  Tensor y;
  char label[64];
  std::snprintf(label, sizeof label, "resize %d->%d", from, to);
  double s = time_ms([&] { core::ref::resize_bilinear(x, to, to, y); }, reps);
  double p = time_ms([&] { core::resize_bilinear(x, to, to, y); }, reps);
  report(label, s, p);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", core::thread_count());
  bench_conv(64, 16, 32, 20);
  bench_conv(128, 8, 16, 10);
  bench_conv(256, 3, 16, 5);
  bench_resize(256, 64, 50);
  bench_resize(64, 256, 50);
  return 0;
}
