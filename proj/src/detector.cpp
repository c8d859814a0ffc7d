// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ganom/error.hpp"
#include "ganom/image.hpp"
#include "ganom/kernels.hpp"
#include "ganom/rng.hpp"

namespace fs = std::filesystem;

namespace ganom::det {

namespace {

void check_direction(const nn::GeneratorState& g, nn::Direction want,
                     const char* op) {
  if (g.direction != want)
    fail(ErrorKind::Config,
         std::string(op) + " needs a " + nn::direction_name(want) +
             " generator, got " + nn::direction_name(g.direction));
}

Tensor resize_unit_frame(const data::Frame& f, int res) {
  Tensor unit = img::frame_to_unit(f);
  if (unit.h == res && unit.w == res) return unit;
  Tensor out;
  core::resize_bilinear(unit, res, res, out);
  return out;
}

}  // namespace

Tensor reconstruct_flow(const nn::GeneratorState& g, const Tensor& frame_model,
                        const nn::NoiseSource& noise) {
  check_direction(g, nn::Direction::FrameToFlow, "reconstruct_flow");
  return nn::generator_forward(g, frame_model, noise);
}

Tensor reconstruct_frame(const nn::GeneratorState& g, const Tensor& flow_model,
                         const nn::NoiseSource& noise) {
  check_direction(g, nn::Direction::FlowToFrame, "reconstruct_frame");
  return nn::generator_forward(g, flow_model, noise);
}

DifferenceMap flow_difference(const Tensor& o, const Tensor& p_o) {
  require_same_shape(o, p_o, "flow_difference");
  DifferenceMap d;
  d.channel = DiffChannel::OpticalFlow;
  d.map = Tensor(1, o.h, o.w);
  const std::size_t n = static_cast<std::size_t>(o.h) * o.w;
  for (int c = 0; c < o.c; ++c) {
    const double* a = o.plane(c);
    const double* b = p_o.plane(c);
    double* out = d.map.plane(0);
    for (std::size_t i = 0; i < n; ++i) out[i] += std::abs(a[i] - b[i]);
  }
  return d;
}

DifferenceMap semantic_difference(const Tensor& h_f, const Tensor& h_pf,
                                  const std::string& prov_f,
                                  const std::string& prov_pf) {
  if (prov_f != prov_pf)
    fail(ErrorKind::Config, "semantic difference across extractors (" +
                                prov_f + " vs " + prov_pf + ")");
  require_same_shape(h_f, h_pf, "semantic_difference");
  DifferenceMap d;
  d.channel = DiffChannel::Semantic;
  d.map = Tensor(1, h_f.h, h_f.w);
  const std::size_t n = static_cast<std::size_t>(h_f.h) * h_f.w;
  const double inv_c = 1.0 / h_f.c;
  for (int c = 0; c < h_f.c; ++c) {
    const double* a = h_f.plane(c);
    const double* b = h_pf.plane(c);
    double* out = d.map.plane(0);
    for (std::size_t i = 0; i < n; ++i) out[i] += std::abs(a[i] - b[i]) * inv_c;
  }
  return d;
}

DifferenceMap upsample_map(const DifferenceMap& m, int th, int tw) {
  if (th < m.map.h || tw < m.map.w)
    fail(ErrorKind::Config, "upsample target smaller than source");
  DifferenceMap out;
  out.channel = m.channel == DiffChannel::Semantic
                    ? DiffChannel::SemanticUpsampled
                    : m.channel;
  core::resize_bilinear(m.map, th, tw, out.map);
  return out;
}

std::pair<std::vector<Tensor>, double> normalize_per_video(
    const std::vector<DifferenceMap>& maps, DiffChannel channel) {
  if (maps.empty())
    fail(ErrorKind::Config, "normalize_per_video: no maps");
  double m = 0.0;
  for (const DifferenceMap& d : maps) {
    if (d.channel != channel)
      fail(ErrorKind::Config, "normalize_per_video: mixed channels");
    m = std::max(m, d.map.max_value());
  }
  std::vector<Tensor> out;
  out.reserve(maps.size());
  for (const DifferenceMap& d : maps) {
    Tensor t = d.map;
    if (m > 0) {
      for (double& v : t.v) v /= m;
    } else {
      t.fill(0.0);  // perfectly reconstructed video carries no evidence
    }
    out.push_back(std::move(t));
  }
  return {std::move(out), m};
}

AbnormalityMap fuse(const Tensor& n_s, const Tensor& n_o, double lambda) {
  require_same_shape(n_s, n_o, "fuse");
  if (lambda < 0) fail(ErrorKind::Config, "lambda must be >= 0");
  AbnormalityMap a;
  a.lambda = lambda;
  a.map = Tensor(1, n_s.h, n_s.w);
  for (std::size_t i = 0; i < a.map.v.size(); ++i)
    a.map.v[i] = n_s.v[i] + lambda * n_o.v[i];
  return a;
}

DetectResult detect_video(const data::VideoSequence& video,
                          const train::TrainerState& f2o,
                          const train::TrainerState& o2f,
                          const percept::FeatureExtractor& extractor,
                          const DetectOptions& opts) {
  check_direction(f2o.gen, nn::Direction::FrameToFlow, "detect_video");
  check_direction(o2f.gen, nn::Direction::FlowToFrame, "detect_video");
  if (video.frames.size() < 2)
    fail(ErrorKind::DegenerateVideo,
         "video " + video.id + " too short for detection");
  if (f2o.cfg.resolution != o2f.cfg.resolution)
    fail(ErrorKind::Config, "checkpoints disagree on resolution");
  for (int i = 0; i < 3; ++i)
    if (f2o.mapping.lo[i] != o2f.mapping.lo[i] ||
        f2o.mapping.hi[i] != o2f.mapping.hi[i])
      fail(ErrorKind::Config,
           "checkpoints carry different flow range mappings; they were not "
           "trained on the same corpus");

  const int res = f2o.cfg.resolution;
  const int T = static_cast<int>(video.frames.size());
  const std::uint64_t vid_hash = fnv1a(video.id);
  const std::uint64_t fhash = flow::flow_config_hash(f2o.cfg.flow);

  fs::path cache_dir;
  if (!opts.flow_cache_dir.empty()) {
    char tag[64];
    std::snprintf(tag, sizeof tag, "_%016llx",
                  static_cast<unsigned long long>(fhash));
    cache_dir = opts.flow_cache_dir / (video.id + tag);
    fs::create_directories(cache_dir);
  }

  std::vector<DifferenceMap> delta_o(T - 1), delta_s_up(T - 1);
  for (int t = 0; t + 1 < T; ++t) {
    Tensor frame_unit = resize_unit_frame(video.frames[t], res);
    Tensor frame_model = img::unit_to_model(frame_unit);

    flow::FlowField field;
    bool loaded = false;
    fs::path cache_file;
    if (!cache_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "%05d.flo", t);
      cache_file = cache_dir / name;
      if (fs::is_regular_file(cache_file)) {
        field = flow::load_precomputed_flow(cache_file);
        loaded = true;
      }
    }
    if (!loaded) {
      field =
          flow::estimate_flow(video.frames[t], video.frames[t + 1], f2o.cfg.flow);
      if (!cache_file.empty()) flow::write_flow(field, cache_file);
    }
    if (field.h() != res || field.w() != res)
      field = flow::resize_flow(field, res, res);
    Tensor o = flow::encode_flow(field, f2o.mapping).channels;

    nn::NoiseSource noise_fo{opts.dropout,
                             mix_seed(opts.seed, "detect-f2o", vid_hash,
                                      static_cast<std::uint64_t>(t))};
    nn::NoiseSource noise_of{opts.dropout,
                             mix_seed(opts.seed, "detect-o2f", vid_hash,
                                      static_cast<std::uint64_t>(t))};
    Tensor p_o = reconstruct_flow(f2o.gen, frame_model, noise_fo);
    Tensor p_f = reconstruct_frame(o2f.gen, o, noise_of);

    delta_o[t] = flow_difference(o, p_o);
    Tensor h_f = extractor.extract(frame_unit);
    Tensor h_pf = extractor.extract(img::model_to_unit(p_f));
    DifferenceMap ds =
        semantic_difference(h_f, h_pf, extractor.id(), extractor.id());
    delta_s_up[t] = upsample_map(ds, res, res);
  }

  auto [n_o, m_o] = normalize_per_video(delta_o, DiffChannel::OpticalFlow);
  auto [n_s, m_s] =
      normalize_per_video(delta_s_up, DiffChannel::SemanticUpsampled);

  DetectResult result;
  result.normalizer = VideoNormalizer{m_o, m_s};
  const int gh = video.height(), gw = video.width();
  for (int t = 0; t + 1 < T; ++t) {
    AbnormalityMap a = fuse(n_s[t], n_o[t], opts.lambda);
    a.frame_index = t;
    a.normalizer = result.normalizer;
    if (a.map.h != gh || a.map.w != gw) {
      Tensor resized;
      core::resize_bilinear(a.map, gh, gw, resized);
      a.map = std::move(resized);
    }
    result.maps.push_back(std::move(a));
    if (opts.keep_channels) {
      Tensor ro, rs;
      core::resize_bilinear(n_o[t], gh, gw, ro);
      core::resize_bilinear(n_s[t], gh, gw, rs);
      result.n_o.push_back(std::move(ro));
      result.n_s.push_back(std::move(rs));
    }
  }
  return result;
}

void write_map(const Tensor& map, const fs::path& path) {
  if (map.c != 1) fail(ErrorKind::Shape, "write_map expects a 1-channel map");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write("AMP1", 4);
  const std::uint32_t h = map.h, w = map.w;
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  std::vector<float> buf(map.v.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<float>(map.v[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) fail(ErrorKind::Io, "short write: " + path.string());
}

Tensor load_map(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open map file: " + path.string());
  char magic[4];
  std::uint32_t h = 0, w = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  in.read(reinterpret_cast<char*>(&w), 4);
  if (!in || std::memcmp(magic, "AMP1", 4) != 0)
    fail(ErrorKind::Format, "bad map header: " + path.string());
  if (h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
    fail(ErrorKind::Format, "implausible map dimensions: " + path.string());
  Tensor map(1, static_cast<int>(h), static_cast<int>(w));
  std::vector<float> buf(map.v.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
    fail(ErrorKind::Format, "truncated map file: " + path.string());
  for (std::size_t i = 0; i < buf.size(); ++i)
    map.v[i] = static_cast<double>(buf[i]);
  return map;
}

}  // namespace ganom::det
