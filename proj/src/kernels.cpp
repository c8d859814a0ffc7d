// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/kernels.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ganom::core {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// One output row of the convolution. Kernel column bounds are clamped ahead
// of the inner loop so the hot loop is branch-free.
inline void conv_fwd_row(const Tensor& x, const ConvSpec& cs, const double* w,
                         const double* b, Tensor& y, int co, int ho) {
  const int k = cs.k, s = cs.stride, p = cs.pad;
  const int H = x.h, W = x.w, ow = y.w;
  double* yrow = y.plane(co) + static_cast<std::size_t>(ho) * ow;
  const int hi0 = ho * s - p;
  const int kh_lo = std::max(0, -hi0);
  const int kh_hi = std::min(k, H - hi0);
  const double bias = b ? b[co] : 0.0;
  for (int wo = 0; wo < ow; ++wo) {
    const int wi0 = wo * s - p;
    const int kw_lo = std::max(0, -wi0);
    const int kw_hi = std::min(k, W - wi0);
    double acc = bias;
    for (int ci = 0; ci < cs.in_c; ++ci) {
      const double* xpl = x.plane(ci);
      const double* wbase =
          w + ((static_cast<std::size_t>(co) * cs.in_c + ci) * k) * k;
      for (int kh = kh_lo; kh < kh_hi; ++kh) {
        const double* xrow = xpl + static_cast<std::size_t>(hi0 + kh) * W + wi0;
        const double* wrow = wbase + static_cast<std::size_t>(kh) * k;
        for (int kw = kw_lo; kw < kw_hi; ++kw) acc += wrow[kw] * xrow[kw];
      }
    }
    yrow[wo] = acc;
  }
}

// Valid (kernel tap -> output index) pairs per input coordinate, hoisted
// out of the hot loop so it runs free of division and branching.
struct TapTable {
  std::vector<int> taps;  // (k, o) pairs, flattened
  std::vector<int> off;   // per-coordinate offsets into taps
};

inline TapTable make_tap_table(int in_dim, int out_dim, int k, int s, int p) {
  TapTable t;
  t.off.assign(in_dim + 1, 0);
  for (int i = 0; i < in_dim; ++i) {
    t.off[i] = static_cast<int>(t.taps.size() / 2);
    for (int kk = 0; kk < k; ++kk) {
      const int v = i + p - kk;
      if (v < 0 || v % s != 0) continue;
      const int o = v / s;
      if (o >= out_dim) continue;
      t.taps.push_back(kk);
      t.taps.push_back(o);
    }
  }
  t.off[in_dim] = static_cast<int>(t.taps.size() / 2);
  return t;
}

// Accumulation order per element is (kh, co, kw); the serial reference
// follows the same order so the comparison can be exact.
inline void conv_bwd_input_row(const Tensor& dy, const ConvSpec& cs,
                               const double* w, Tensor& dx, int ci, int hi,
                               const TapTable& rows, const TapTable& cols) {
  const int k = cs.k, W = dx.w;
  double* dxrow = dx.plane(ci) + static_cast<std::size_t>(hi) * W;
  for (int wi = 0; wi < W; ++wi) dxrow[wi] = 0.0;
  for (int r = rows.off[hi]; r < rows.off[hi + 1]; ++r) {
    const int kh = rows.taps[2 * r];
    const int ho = rows.taps[2 * r + 1];
    for (int co = 0; co < cs.out_c; ++co) {
      const double* dyrow =
          dy.plane(co) + static_cast<std::size_t>(ho) * dy.w;
      const double* wrow =
          w + (((static_cast<std::size_t>(co) * cs.in_c + ci) * k) + kh) * k;
      for (int wi = 0; wi < W; ++wi) {
        double acc = dxrow[wi];
        for (int cidx = cols.off[wi]; cidx < cols.off[wi + 1]; ++cidx)
          acc += wrow[cols.taps[2 * cidx]] * dyrow[cols.taps[2 * cidx + 1]];
        dxrow[wi] = acc;
      }
    }
  }
}

// Full weight-gradient slice for one output channel; accumulation runs in
// (ho, wo) order per weight element.
inline void conv_bwd_weights_slice(const Tensor& x, const Tensor& dy,
                                   const ConvSpec& cs, double* dw, double* db,
                                   int co) {
  const int k = cs.k, s = cs.stride, p = cs.pad;
  const int H = x.h, W = x.w, oh = dy.h, ow = dy.w;
  double* dwc = dw + (static_cast<std::size_t>(co) * cs.in_c) * k * k;
  const double* dypl = dy.plane(co);
  double bacc = 0.0;
  for (int ho = 0; ho < oh; ++ho) {
    const int hi0 = ho * s - p;
    const int kh_lo = std::max(0, -hi0);
    const int kh_hi = std::min(k, H - hi0);
    const double* dyrow = dypl + static_cast<std::size_t>(ho) * ow;
    for (int wo = 0; wo < ow; ++wo) {
      const double g = dyrow[wo];
      bacc += g;
      const int wi0 = wo * s - p;
      const int kw_lo = std::max(0, -wi0);
      const int kw_hi = std::min(k, W - wi0);
      for (int ci = 0; ci < cs.in_c; ++ci) {
        const double* xpl = x.plane(ci);
        double* dwci = dwc + (static_cast<std::size_t>(ci) * k) * k;
        for (int kh = kh_lo; kh < kh_hi; ++kh) {
          const double* xrow =
              xpl + static_cast<std::size_t>(hi0 + kh) * W + wi0;
          double* dwrow = dwci + static_cast<std::size_t>(kh) * k;
          for (int kw = kw_lo; kw < kw_hi; ++kw)
            dwrow[kw] += g * xrow[kw];
        }
      }
    }
  }
  if (db) db[co] += bacc;
}

inline void resize_row(const Tensor& src, Tensor& dst, int ci, int oy) {
  const int sh = src.h, sw = src.w, ow = dst.w, oh = dst.h;
  const double sy = oh > 1 ? static_cast<double>(sh - 1) / (oh - 1) : 0.0;
  const double sx = ow > 1 ? static_cast<double>(sw - 1) / (ow - 1) : 0.0;
  const double fy = oy * sy;
  int y0 = static_cast<int>(fy);
  if (y0 > sh - 2) y0 = std::max(0, sh - 2);
  const double wy = sh > 1 ? fy - y0 : 0.0;
  const int y1 = std::min(y0 + 1, sh - 1);
  const double* r0 = src.plane(ci) + static_cast<std::size_t>(y0) * sw;
  const double* r1 = src.plane(ci) + static_cast<std::size_t>(y1) * sw;
  double* out = dst.plane(ci) + static_cast<std::size_t>(oy) * ow;
  for (int ox = 0; ox < ow; ++ox) {
    const double fx = ox * sx;
    int x0 = static_cast<int>(fx);
    if (x0 > sw - 2) x0 = std::max(0, sw - 2);
    const double wx = sw > 1 ? fx - x0 : 0.0;
    const int x1 = std::min(x0 + 1, sw - 1);
    const double top = r0[x0] + wx * (r0[x1] - r0[x0]);
    const double bot = r1[x0] + wx * (r1[x1] - r1[x0]);
    out[ox] = top + wy * (bot - top);
  }
}

}  // namespace

void conv2d_forward(const Tensor& x, const ConvSpec& cs, const double* w,
                    const double* b, Tensor& y) {
  const int rows = cs.out_c * y.h;
  for_each_row(rows, [&](int r) {
    conv_fwd_row(x, cs, w, b, y, r / y.h, r % y.h);
  });
}

void conv2d_backward_input(const Tensor& dy, const ConvSpec& cs,
                           const double* w, Tensor& dx) {
  const TapTable row_taps =
      make_tap_table(dx.h, dy.h, cs.k, cs.stride, cs.pad);
  const TapTable col_taps =
      make_tap_table(dx.w, dy.w, cs.k, cs.stride, cs.pad);
  const int rows = cs.in_c * dx.h;
  for_each_row(rows, [&](int r) {
    conv_bwd_input_row(dy, cs, w, dx, r / dx.h, r % dx.h, row_taps, col_taps);
  });
}

void conv2d_backward_weights(const Tensor& x, const Tensor& dy,
                             const ConvSpec& cs, double* dw, double* db) {
  for_each_row(cs.out_c, [&](int co) {
    conv_bwd_weights_slice(x, dy, cs, dw, db, co);
  });
}

void resize_bilinear(const Tensor& src, int oh, int ow, Tensor& dst) {
  dst = Tensor(src.c, oh, ow);
  const int rows = src.c * oh;
  for_each_row(rows, [&](int r) { resize_row(src, dst, r / oh, r % oh); });
}

// Textbook loops, independent of the row workers above. Out-of-range taps
// are skipped (zero padding), which keeps the accumulation order of the
// remaining terms identical to the optimized kernels, so the comparison in
// the tests can be exact.
namespace ref {

void conv2d_forward(const Tensor& x, const ConvSpec& cs, const double* w,
                    const double* b, Tensor& y) {
  const int k = cs.k;
  for (int co = 0; co < cs.out_c; ++co)
    for (int ho = 0; ho < y.h; ++ho)
      for (int wo = 0; wo < y.w; ++wo) {
        double acc = b ? b[co] : 0.0;
        for (int ci = 0; ci < cs.in_c; ++ci)
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              const int hi = ho * cs.stride - cs.pad + kh;
              const int wi = wo * cs.stride - cs.pad + kw;
              if (hi < 0 || hi >= x.h || wi < 0 || wi >= x.w) continue;
              acc += w[((static_cast<std::size_t>(co) * cs.in_c + ci) * k +
                        kh) * k + kw] * x.at(ci, hi, wi);
            }
        y.at(co, ho, wo) = acc;
      }
}

void conv2d_backward_input(const Tensor& dy, const ConvSpec& cs,
                           const double* w, Tensor& dx) {
  const int k = cs.k;
  for (int ci = 0; ci < cs.in_c; ++ci)
    for (int hi = 0; hi < dx.h; ++hi)
      for (int wi = 0; wi < dx.w; ++wi) {
        double acc = 0.0;
        for (int kh = 0; kh < k; ++kh)
          for (int co = 0; co < cs.out_c; ++co)
            for (int kw = 0; kw < k; ++kw) {
              const int th = hi + cs.pad - kh;
              const int tw = wi + cs.pad - kw;
              if (th < 0 || tw < 0 || th % cs.stride || tw % cs.stride)
                continue;
              const int ho = th / cs.stride, wo = tw / cs.stride;
              if (ho >= dy.h || wo >= dy.w) continue;
              acc += w[((static_cast<std::size_t>(co) * cs.in_c + ci) * k +
                        kh) * k + kw] * dy.at(co, ho, wo);
            }
        dx.at(ci, hi, wi) = acc;
      }
}

void conv2d_backward_weights(const Tensor& x, const Tensor& dy,
                             const ConvSpec& cs, double* dw, double* db) {
  const int k = cs.k;
  for (int co = 0; co < cs.out_c; ++co) {
    for (int ci = 0; ci < cs.in_c; ++ci)
      for (int kh = 0; kh < k; ++kh)
        for (int kw = 0; kw < k; ++kw) {
          double acc = 0.0;
          for (int ho = 0; ho < dy.h; ++ho)
            for (int wo = 0; wo < dy.w; ++wo) {
              const int hi = ho * cs.stride - cs.pad + kh;
              const int wi = wo * cs.stride - cs.pad + kw;
              if (hi < 0 || hi >= x.h || wi < 0 || wi >= x.w) continue;
              acc += dy.at(co, ho, wo) * x.at(ci, hi, wi);
            }
          dw[((static_cast<std::size_t>(co) * cs.in_c + ci) * k + kh) * k +
             kw] += acc;
        }
    if (db) {
      double acc = 0.0;
      for (int ho = 0; ho < dy.h; ++ho)
        for (int wo = 0; wo < dy.w; ++wo) acc += dy.at(co, ho, wo);
      db[co] += acc;
    }
  }
}

void resize_bilinear(const Tensor& src, int oh, int ow, Tensor& dst) {
  dst = Tensor(src.c, oh, ow);
  const double sy = oh > 1 ? static_cast<double>(src.h - 1) / (oh - 1) : 0.0;
  const double sx = ow > 1 ? static_cast<double>(src.w - 1) / (ow - 1) : 0.0;
  for (int ci = 0; ci < src.c; ++ci)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double fy = oy * sy, fx = ox * sx;
        int y0 = std::min(static_cast<int>(fy), std::max(0, src.h - 2));
        int x0 = std::min(static_cast<int>(fx), std::max(0, src.w - 2));
        const int y1 = std::min(y0 + 1, src.h - 1);
        const int x1 = std::min(x0 + 1, src.w - 1);
        const double wy = src.h > 1 ? fy - y0 : 0.0;
        const double wx = src.w > 1 ? fx - x0 : 0.0;
        const double top =
            src.at(ci, y0, x0) + wx * (src.at(ci, y0, x1) - src.at(ci, y0, x0));
        const double bot =
            src.at(ci, y1, x0) + wx * (src.at(ci, y1, x1) - src.at(ci, y1, x0));
        dst.at(ci, oy, ox) = top + wy * (bot - top);
      }
}

}  // namespace ref

}  // namespace ganom::core
