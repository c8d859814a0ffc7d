// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "ganom/error.hpp"

namespace ganom::img {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

}  // namespace

data::Frame load_frame(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);  // BGR
  if (m.empty())
    fail(ErrorKind::Io, "cannot read image: " + path.string());
  data::Frame f;
  f.h = m.rows;
  f.w = m.cols;
  f.rgb.resize(static_cast<std::size_t>(f.h) * f.w * 3);
  for (int y = 0; y < f.h; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < f.w; ++x) {
      auto* px = f.px(y, x);
      px[0] = row[x][2];
      px[1] = row[x][1];
      px[2] = row[x][0];
    }
  }
  return f;
}

void save_frame_png(const data::Frame& f, const std::filesystem::path& path) {
  cv::Mat m(f.h, f.w, CV_8UC3);
  for (int y = 0; y < f.h; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < f.w; ++x) {
      const auto* px = f.px(y, x);
      row[x] = cv::Vec3b(px[2], px[1], px[0]);
    }
  }
  if (!cv::imwrite(path.string(), m))
    fail(ErrorKind::Io, "cannot write image: " + path.string());
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path, int* h,
                                    int* w) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty())
    fail(ErrorKind::Io, "cannot read mask: " + path.string());
  *h = m.rows;
  *w = m.cols;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(m.rows) * m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x)
      mask[static_cast<std::size_t>(y) * m.cols + x] = row[x] ? 1 : 0;
  }
  return mask;
}

void save_mask_png(const std::vector<std::uint8_t>& mask, int h, int w,
                   const std::filesystem::path& path) {
  cv::Mat m(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.at<std::uint8_t>(y, x) =
          mask[static_cast<std::size_t>(y) * w + x] ? 255 : 0;
  if (!cv::imwrite(path.string(), m))
    fail(ErrorKind::Io, "cannot write mask: " + path.string());
}

void save_heatmap_png(const Tensor& map, double scale,
                      const std::filesystem::path& path) {
  if (map.c != 1) fail(ErrorKind::Shape, "heatmap expects a 1-channel map");
  cv::Mat m(map.h, map.w, CV_8UC3);
  const double inv = scale > 0 ? 1.0 / scale : 0.0;
  for (int y = 0; y < map.h; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < map.w; ++x) {
      double t = std::clamp(map.at(0, y, x) * inv, 0.0, 1.0);
      // dark blue -> red -> yellow ramp
      double r = std::clamp(2.0 * t, 0.0, 1.0);
      double g = std::clamp(2.0 * t - 1.0, 0.0, 1.0);
      double b = std::clamp(0.5 - t, 0.0, 0.5);
      row[x] = cv::Vec3b(to_u8(255 * b), to_u8(255 * g), to_u8(255 * r));
    }
  }
  if (!cv::imwrite(path.string(), m))
    fail(ErrorKind::Io, "cannot write heatmap: " + path.string());
}

void save_overlay_png(const data::Frame& frame, const Tensor& map,
                      double threshold, const std::filesystem::path& path) {
  if (map.c != 1 || map.h != frame.h || map.w != frame.w)
    fail(ErrorKind::Shape, "overlay map must match the frame dimensions");
  cv::Mat m(frame.h, frame.w, CV_8UC3);
  for (int y = 0; y < frame.h; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < frame.w; ++x) {
      const auto* px = frame.px(y, x);
      if (map.at(0, y, x) >= threshold) {
        row[x] = cv::Vec3b(to_u8(px[2] * 0.4), to_u8(px[1] * 0.4),
                           to_u8(px[0] * 0.4 + 153));
      } else {
        row[x] = cv::Vec3b(px[2], px[1], px[0]);
      }
    }
  }
  if (!cv::imwrite(path.string(), m))
    fail(ErrorKind::Io, "cannot write overlay: " + path.string());
}

Tensor frame_to_unit(const data::Frame& f) {
  Tensor t(3, f.h, f.w);
  for (int c = 0; c < 3; ++c) {
    double* plane = t.plane(c);
    for (int y = 0; y < f.h; ++y)
      for (int x = 0; x < f.w; ++x)
        plane[static_cast<std::size_t>(y) * f.w + x] =
            f.px(y, x)[c] / 255.0;
  }
  return t;
}

Tensor unit_to_model(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.v) v = 2.0 * v - 1.0;
  return out;
}

Tensor model_to_unit(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.v) v = std::clamp(0.5 * (v + 1.0), 0.0, 1.0);
  return out;
}

data::Frame unit_to_frame(const Tensor& t) {
  if (t.c != 3) fail(ErrorKind::Shape, "unit_to_frame expects 3 channels");
  data::Frame f;
  f.h = t.h;
  f.w = t.w;
  f.rgb.resize(static_cast<std::size_t>(t.h) * t.w * 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        f.px(y, x)[c] = to_u8(255.0 * t.at(c, y, x));
  return f;
}

}  // namespace ganom::img
