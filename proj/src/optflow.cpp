// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/optflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ganom/error.hpp"
#include "ganom/kernels.hpp"
#include "ganom/rng.hpp"

namespace ganom::flow {

namespace {

Tensor to_gray(const data::Frame& f) {
  Tensor g(1, f.h, f.w);
  double* p = g.plane(0);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) {
      const auto* px = f.px(y, x);
      p[static_cast<std::size_t>(y) * f.w + x] =
          (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    }
  return g;
}

Tensor downsample2(const Tensor& src) {
  const int oh = src.h / 2, ow = src.w / 2;
  Tensor dst(src.c, oh, ow);
  for (int c = 0; c < src.c; ++c) {
    const double* sp = src.plane(c);
    double* dp = dst.plane(c);
    core::for_each_row(oh, [&](int y) {
      const double* r0 = sp + static_cast<std::size_t>(2 * y) * src.w;
      const double* r1 = r0 + src.w;
      double* out = dp + static_cast<std::size_t>(y) * ow;
      for (int x = 0; x < ow; ++x)
        out[x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    });
  }
  return dst;
}

inline double sample_clamped(const double* p, int h, int w, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  int y0 = std::min(static_cast<int>(y), h - 2 < 0 ? 0 : h - 2);
  int x0 = std::min(static_cast<int>(x), w - 2 < 0 ? 0 : w - 2);
  int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  double wy = y - y0, wx = x - x0;
  const double* r0 = p + static_cast<std::size_t>(y0) * w;
  const double* r1 = p + static_cast<std::size_t>(y1) * w;
  double top = r0[x0] + wx * (r0[x1] - r0[x0]);
  double bot = r1[x0] + wx * (r1[x1] - r1[x0]);
  return top + wy * (bot - top);
}

// One Horn-Schunck increment pass at a fixed pyramid level.
void relax_level(const Tensor& a, const Tensor& b, Tensor& u, Tensor& v,
                 const FlowConfig& cfg) {
  const int h = a.h, w = a.w;
  const double alpha2 = cfg.alpha * cfg.alpha;
  Tensor warped(1, h, w), ix(1, h, w), iy(1, h, w), it(1, h, w);
  Tensor du(1, h, w), dv(1, h, w), du2(1, h, w), dv2(1, h, w);

  for (int warp = 0; warp < cfg.warps; ++warp) {
    const double* bp = b.plane(0);
    const double* ap = a.plane(0);
    core::for_each_row(h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        warped.v[i] =
            sample_clamped(bp, h, w, y + v.v[i], x + u.v[i]);
      }
    });
    core::for_each_row(h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        auto avg = [&](int yy, int xx) {
          const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
          return 0.5 * (ap[j] + warped.v[j]);
        };
        const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
        const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
        ix.v[i] = 0.5 * (avg(y, xp) - avg(y, xm));
        iy.v[i] = 0.5 * (avg(yp, x) - avg(ym, x));
        it.v[i] = warped.v[i] - ap[i];
      }
    });
    du.fill(0.0);
    dv.fill(0.0);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
      core::for_each_row(h, [&](int y) {
        const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
        for (int x = 0; x < w; ++x) {
          const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          auto at = [&](const Tensor& t, int yy, int xx) {
            return t.v[static_cast<std::size_t>(yy) * w + xx];
          };
          const double ubar = 0.25 * (at(du, ym, x) + at(du, yp, x) +
                                      at(du, y, xm) + at(du, y, xp));
          const double vbar = 0.25 * (at(dv, ym, x) + at(dv, yp, x) +
                                      at(dv, y, xm) + at(dv, y, xp));
          const double gx = ix.v[i], gy = iy.v[i];
          const double t =
              (gx * ubar + gy * vbar + it.v[i]) / (alpha2 + gx * gx + gy * gy);
          du2.v[i] = ubar - gx * t;
          dv2.v[i] = vbar - gy * t;
        }
      });
      std::swap(du, du2);
      std::swap(dv, dv2);
    }
    for (std::size_t i = 0; i < u.v.size(); ++i) {
      u.v[i] += du.v[i];
      v.v[i] += dv.v[i];
    }
  }
}

}  // namespace

std::uint64_t flow_config_hash(const FlowConfig& cfg) {
  std::uint64_t h = fnv1a("flow-config-v1");
  h = fnv1a(&cfg.levels, sizeof cfg.levels, h);
  h = fnv1a(&cfg.min_size, sizeof cfg.min_size, h);
  h = fnv1a(&cfg.warps, sizeof cfg.warps, h);
  h = fnv1a(&cfg.iterations, sizeof cfg.iterations, h);
  h = fnv1a(&cfg.alpha, sizeof cfg.alpha, h);
  return h;
}

FlowField estimate_flow(const data::Frame& a, const data::Frame& b,
                        const FlowConfig& cfg) {
  if (a.h != b.h || a.w != b.w)
    fail(ErrorKind::Shape, "flow inputs must have equal dimensions");
  std::vector<Tensor> pa{to_gray(a)}, pb{to_gray(b)};
  int levels = cfg.levels;
  if (levels <= 0) {
    levels = 1;
    int s = std::min(a.h, a.w);
    while (s / 2 >= cfg.min_size && levels < 6) {
      s /= 2;
      ++levels;
    }
  }
  for (int l = 1; l < levels; ++l) {
    if (std::min(pa.back().h, pa.back().w) / 2 < 4) break;
    pa.push_back(downsample2(pa.back()));
    pb.push_back(downsample2(pb.back()));
  }

  Tensor u(1, pa.back().h, pa.back().w), v(1, pa.back().h, pa.back().w);
  for (int l = static_cast<int>(pa.size()) - 1; l >= 0; --l) {
    if (l != static_cast<int>(pa.size()) - 1) {
      Tensor u2, v2;
      core::resize_bilinear(u, pa[l].h, pa[l].w, u2);
      core::resize_bilinear(v, pa[l].h, pa[l].w, v2);
      const double sx = static_cast<double>(pa[l].w) / pa[l + 1].w;
      const double sy = static_cast<double>(pa[l].h) / pa[l + 1].h;
      for (double& x : u2.v) x *= sx;
      for (double& x : v2.v) x *= sy;
      u = std::move(u2);
      v = std::move(v2);
    }
    relax_level(pa[l], pb[l], u, v, cfg);
  }

  FlowField f;
  f.uv = Tensor(2, a.h, a.w);
  // Border ring is estimator-invalid; fix it to zero flow. Values are
  // quantized to float32 so cached and fresh fields agree bitwise.
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * a.w + x;
      const bool border = y == 0 || x == 0 || y == a.h - 1 || x == a.w - 1;
      f.uv.plane(0)[i] =
          border ? 0.0 : static_cast<double>(static_cast<float>(u.v[i]));
      f.uv.plane(1)[i] =
          border ? 0.0 : static_cast<double>(static_cast<float>(v.v[i]));
    }
  return f;
}

FlowImage encode_flow(const FlowField& f, const FlowMapping& mapping) {
  const int h = f.h(), w = f.w();
  FlowImage img;
  img.mapping = mapping;
  img.channels = Tensor(3, h, w);
  const double* u = f.uv.plane(0);
  const double* v = f.uv.plane(1);
  for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
      fail(ErrorKind::Numeric, "non-finite flow value");
    const double raw[3] = {u[i], v[i], std::sqrt(u[i] * u[i] + v[i] * v[i])};
    for (int c = 0; c < 3; ++c) {
      const double range = img.mapping.hi[c] - img.mapping.lo[c];
      img.channels.plane(c)[i] =
          2.0 * (raw[c] - img.mapping.lo[c]) / range - 1.0;
    }
  }
  return img;
}

FlowField decode_flow(const FlowImage& img) {
  FlowField f;
  f.uv = Tensor(2, img.channels.h, img.channels.w);
  for (int c = 0; c < 2; ++c) {
    const double range = img.mapping.hi[c] - img.mapping.lo[c];
    const double* src = img.channels.plane(c);
    double* dst = f.uv.plane(c);
    for (std::size_t i = 0; i < f.uv.v.size() / 2; ++i)
      dst[i] = img.mapping.lo[c] + 0.5 * (src[i] + 1.0) * range;
  }
  return f;
}

void MappingEstimator::add(const FlowField& f) {
  const double* u = f.uv.plane(0);
  const double* v = f.uv.plane(1);
  const std::size_t n = static_cast<std::size_t>(f.h()) * f.w();
  // Deterministic stride subsampling keeps memory bounded on large runs.
  const std::size_t cap = 50'000'000;
  const std::size_t stride = u_.size() > cap ? 16 : 1;
  for (std::size_t i = 0; i < n; i += stride) {
    u_.push_back(u[i]);
    v_.push_back(v[i]);
    mag_.push_back(std::sqrt(u[i] * u[i] + v[i] * v[i]));
  }
}

namespace {
double percentile(std::vector<double> vals, double q) {
  if (vals.empty()) fail(ErrorKind::Config, "no flow samples for mapping");
  std::size_t k = static_cast<std::size_t>(q * (vals.size() - 1));
  std::nth_element(vals.begin(), vals.begin() + k, vals.end());
  return vals[k];
}
}  // namespace

FlowMapping MappingEstimator::finish() const {
  FlowMapping m;
  const std::vector<double>* chans[3] = {&u_, &v_, &mag_};
  for (int c = 0; c < 3; ++c) {
    m.lo[c] = percentile(*chans[c], 0.01);
    m.hi[c] = percentile(*chans[c], 0.99);
    if (!(m.hi[c] > m.lo[c])) m.hi[c] = m.lo[c] + 1.0;
  }
  return m;
}

FlowField resize_flow(const FlowField& f, int oh, int ow) {
  FlowField out;
  core::resize_bilinear(f.uv, oh, ow, out.uv);
  const double sx = static_cast<double>(ow) / f.w();
  const double sy = static_cast<double>(oh) / f.h();
  double* u = out.uv.plane(0);
  double* v = out.uv.plane(1);
  for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) {
    u[i] *= sx;
    v[i] *= sy;
  }
  return out;
}

void write_flow(const FlowField& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write("FLO1", 4);
  const std::uint32_t h = f.h(), w = f.w();
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  std::vector<float> buf(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < 2; ++c) {
    const double* p = f.uv.plane(c);
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = static_cast<float>(p[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) fail(ErrorKind::Io, "short write: " + path.string());
}

FlowField load_precomputed_flow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open flow file: " + path.string());
  char magic[4];
  std::uint32_t h = 0, w = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  if (!in || std::memcmp(magic, "FLO1", 4) != 0)
    fail(ErrorKind::Format, "bad flow header: " + path.string());
  if (h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
    fail(ErrorKind::Format, "implausible flow dimensions: " + path.string());
  FlowField f;
  f.uv = Tensor(2, static_cast<int>(h), static_cast<int>(w));
  std::vector<float> buf(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < 2; ++c) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() !=
        static_cast<std::streamsize>(buf.size() * sizeof(float)))
      fail(ErrorKind::Format, "truncated flow file: " + path.string());
    double* p = f.uv.plane(c);
    for (std::size_t i = 0; i < buf.size(); ++i)
      p[i] = static_cast<double>(buf[i]);
  }
  char extra;
  if (in.read(&extra, 1))
    fail(ErrorKind::Format, "trailing bytes in flow file: " + path.string());
  return f;
}

}  // namespace ganom::flow
