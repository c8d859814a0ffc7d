// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ganom/error.hpp"
#include "ganom/image.hpp"
#include "ganom/kernels.hpp"
#include "ganom/rng.hpp"

namespace fs = std::filesystem;

namespace ganom::train {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x314B4347;  // "GCK1"
constexpr std::uint32_t kCheckpointVersion = 1;

Tensor resize_model_frame(const data::Frame& f, int res) {
  Tensor unit = img::frame_to_unit(f);
  if (unit.h != res || unit.w != res) {
    Tensor resized;
    core::resize_bilinear(unit, res, res, resized);
    unit = std::move(resized);
  }
  return img::unit_to_model(unit);
}

void check_finite(const StepMetrics& m, const TrainerState& ts) {
  if (std::isfinite(m.loss_d) && std::isfinite(m.loss_g_adv) &&
      std::isfinite(m.loss_l1))
    return;
  (void)ts;
  fail(ErrorKind::TrainingDivergence,
       "non-finite training loss (loss_D=" + std::to_string(m.loss_d) +
           ", loss_G_adv=" + std::to_string(m.loss_g_adv) +
           ", loss_L1=" + std::to_string(m.loss_l1) + ")");
}

void opt_update(std::vector<double>& params, const std::vector<double>& grads,
                OptState& st, const TrainConfig& cfg) {
  const double lr = cfg.learning_rate;
  if (cfg.optimizer == TrainConfig::Optimizer::SgdMomentum) {
    const double mu = cfg.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m1[i] = mu * st.m1[i] + grads[i];
      params[i] -= lr * st.m1[i];
    }
  } else {
    const double b1 = cfg.momentum, b2 = 0.999, eps = 1e-8;
    st.t += 1;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m1[i] = b1 * st.m1[i] + (1.0 - b1) * grads[i];
      st.m2[i] = b2 * st.m2[i] + (1.0 - b2) * grads[i] * grads[i];
      params[i] -= lr * (st.m1[i] / c1) / (std::sqrt(st.m2[i] / c2) + eps);
    }
  }
}

struct Writer {
  std::ofstream out;
  explicit Writer(const fs::path& p) : out(p, std::ios::binary) {
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + p.string());
  }
  template <typename T>
  void pod(const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void doubles(const std::vector<double>& v) {
    pod(static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
};

struct Reader {
  std::ifstream in;
  fs::path path;
  explicit Reader(const fs::path& p) : in(p, std::ios::binary), path(p) {
    if (!in) fail(ErrorKind::Io, "cannot open checkpoint: " + p.string());
  }
  template <typename T>
  void pod(T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) fail(ErrorKind::Format, "truncated checkpoint: " + path.string());
  }
  std::vector<double> doubles() {
    std::uint64_t n = 0;
    pod(n);
    if (n > (1ull << 32))
      fail(ErrorKind::Format, "implausible blob size in " + path.string());
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) fail(ErrorKind::Format, "truncated checkpoint: " + path.string());
    return v;
  }
};

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (cfg.batch_size < 1) fail(ErrorKind::Config, "batch_size must be >= 1");
  if (cfg.momentum < 0 || cfg.momentum >= 1)
    fail(ErrorKind::Config, "momentum must be in [0, 1)");
  if (cfg.lambda_l1 < 0) fail(ErrorKind::Config, "lambda_l1 must be >= 0");
  if (cfg.dropout < 0 || cfg.dropout >= 1)
    fail(ErrorKind::Config, "dropout rate must be in [0, 1)");
  nn::GenConfig gc{cfg.resolution, cfg.gen_channels, cfg.dropout};
  nn::make_generator_topology(gc);  // validates the resolution
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "v1|%s|%d|%d|%d|%.17g|%.17g|%.17g|%d|%d|%d|%.17g|%llu|"
                "%d|%d|%d|%d|%.17g",
                nn::direction_name(cfg.direction), cfg.epochs, cfg.batch_size,
                static_cast<int>(cfg.optimizer), cfg.momentum,
                cfg.learning_rate, cfg.lambda_l1, cfg.resolution,
                cfg.gen_channels, cfg.disc_channels, cfg.dropout,
                static_cast<unsigned long long>(cfg.seed), cfg.flow.levels,
                cfg.flow.min_size, cfg.flow.warps, cfg.flow.iterations,
                cfg.flow.alpha);
  return fnv1a(buf);
}

PairStream::PairStream(const data::DatasetSplit& split, const TrainConfig& cfg,
                       const fs::path& flow_cache_dir)
    : cfg_(cfg) {
  validate(cfg);
  if (split.train.empty())
    fail(ErrorKind::Config, "train split is empty");
  // Normal-only contract: training data must not contain abnormal frames.
  for (const auto& v : split.train) {
    if (!v.ground_truth) continue;
    for (std::uint8_t l : v.ground_truth->frame_labels)
      if (l)
        fail(ErrorKind::Config,
             "train video " + v.id + " is flagged abnormal; training uses "
             "normal-only videos");
  }

  const std::uint64_t fhash = flow::flow_config_hash(cfg.flow);
  flow::MappingEstimator est;
  for (const auto& video : split.train) {
    if (video.frames.size() < 2)
      fail(ErrorKind::DegenerateVideo,
           "train video " + video.id + " too short for flow pairs");
    std::vector<std::size_t> frame_pos(video.frames.size());
    for (std::size_t t = 0; t < video.frames.size(); ++t) {
      frames_.push_back(resize_model_frame(video.frames[t], cfg.resolution));
      frame_pos[t] = frames_.size() - 1;
    }
    fs::path cache_dir;
    if (!flow_cache_dir.empty()) {
      char tag[64];
      std::snprintf(tag, sizeof tag, "_%016llx",
                    static_cast<unsigned long long>(fhash));
      cache_dir = flow_cache_dir / (video.id + tag);
      fs::create_directories(cache_dir);
    }
    for (std::size_t t = 0; t + 1 < video.frames.size(); ++t) {
      flow::FlowField field;
      bool loaded = false;
      fs::path cache_file;
      if (!cache_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.flo", t);
        cache_file = cache_dir / name;
        if (fs::is_regular_file(cache_file)) {
          field = flow::load_precomputed_flow(cache_file);
          loaded = true;
        }
      }
      if (!loaded) {
        field = flow::estimate_flow(video.frames[t], video.frames[t + 1],
                                    cfg.flow);
        if (!cache_file.empty()) flow::write_flow(field, cache_file);
      }
      flow::FlowField resized =
          field.h() == cfg.resolution && field.w() == cfg.resolution
              ? std::move(field)
              : flow::resize_flow(field, cfg.resolution, cfg.resolution);
      est.add(resized);
      flows_.push_back(std::move(resized));
      pair_video_.push_back(pair_video_.size());
      pair_frames_.emplace_back(frame_pos[t], frame_pos[t + 1]);
    }
  }
  mapping_ = est.finish();
}

std::vector<std::size_t> PairStream::epoch_order(int epoch) const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(cfg_.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  rng.shuffle(order);
  return order;
}

TrainingPair PairStream::get(std::size_t index) const {
  const Tensor& frame = frames_[pair_frames_[index].first];
  flow::FlowImage o = flow::encode_flow(flows_[index], mapping_);
  TrainingPair p;
  if (cfg_.direction == nn::Direction::FrameToFlow) {
    p.x = frame;
    p.y = std::move(o.channels);
  } else {
    p.x = std::move(o.channels);
    p.y = frame;
  }
  return p;
}

TrainerState make_trainer_state(const TrainConfig& cfg,
                                const flow::FlowMapping& mapping) {
  validate(cfg);
  TrainerState ts;
  ts.cfg = cfg;
  ts.mapping = mapping;
  nn::GenConfig gc{cfg.resolution, cfg.gen_channels, cfg.dropout};
  nn::DiscConfig dc{cfg.resolution, cfg.disc_channels};
  ts.gen = nn::make_generator(cfg.direction, gc, cfg.seed);
  ts.disc = nn::make_discriminator(dc, cfg.seed);
  ts.gen_opt.m1.assign(ts.gen.params.size(), 0.0);
  ts.gen_opt.m2.assign(ts.gen.params.size(), 0.0);
  ts.disc_opt.m1.assign(ts.disc.params.size(), 0.0);
  ts.disc_opt.m2.assign(ts.disc.params.size(), 0.0);
  return ts;
}

StepMetrics train_step(TrainerState& ts,
                       const std::vector<const TrainingPair*>& batch) {
  if (batch.empty()) fail(ErrorKind::Config, "empty training batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  StepMetrics metrics;

  struct Sample {
    nn::GenTape gtape;
    Tensor fake;
    nn::NoiseSource noise;
  };
  std::vector<Sample> samples(batch.size());

  // Discriminator update first (one step each, as in the adopted framework).
  std::vector<double> dgrads(ts.disc.params.size(), 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainingPair& pair = *batch[b];
    Sample& s = samples[b];
    s.noise = nn::NoiseSource{true, mix_seed(ts.cfg.seed, "step-noise",
                                             ts.global_step, b)};
    s.fake = nn::generator_forward(ts.gen, pair.x, s.noise, &s.gtape);

    nn::DiscTape dt_real, dt_fake;
    Tensor d_real = nn::discriminator_forward(ts.disc, pair.x, pair.y, &dt_real);
    Tensor d_fake = nn::discriminator_forward(ts.disc, pair.x, s.fake, &dt_fake);
    nn::CganLoss loss = nn::cgan_loss(d_real, d_fake);
    metrics.loss_d += loss.loss_d * inv_b;

    Tensor g_real = nn::cgan_loss_d_grad_real(d_real);
    Tensor g_fake = nn::cgan_loss_d_grad_fake(d_fake);
    for (double& v : g_real.v) v *= inv_b;
    for (double& v : g_fake.v) v *= inv_b;
    nn::discriminator_backward(ts.disc, dt_real, g_real, &dgrads);
    nn::discriminator_backward(ts.disc, dt_fake, g_fake, &dgrads);
  }
  opt_update(ts.disc.params, dgrads, ts.disc_opt, ts.cfg);

  // Generator update against the refreshed discriminator.
  std::vector<double> ggrads(ts.gen.params.size(), 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainingPair& pair = *batch[b];
    Sample& s = samples[b];
    nn::DiscTape dt;
    Tensor d_fake = nn::discriminator_forward(ts.disc, pair.x, s.fake, &dt);
    nn::CganLoss loss = nn::cgan_loss(d_fake, d_fake);
    metrics.loss_g_adv += loss.loss_g_adv * inv_b;
    const double l1 = nn::l1_loss(pair.y, s.fake);
    metrics.loss_l1 += l1 * inv_b;

    Tensor g_adv = nn::cgan_loss_g_grad_fake(d_fake);
    for (double& v : g_adv.v) v *= inv_b;
    Tensor dfake = nn::discriminator_backward(ts.disc, dt, g_adv, nullptr).second;
    Tensor g_l1 = nn::l1_loss_grad_p(pair.y, s.fake);
    for (std::size_t i = 0; i < dfake.v.size(); ++i)
      dfake.v[i] += ts.cfg.lambda_l1 * inv_b * g_l1.v[i];
    nn::generator_backward(ts.gen, s.gtape, dfake, ggrads);
  }
  opt_update(ts.gen.params, ggrads, ts.gen_opt, ts.cfg);

  ts.global_step += 1;
  ts.last = metrics;
  check_finite(metrics, ts);
  return metrics;
}

StepMetrics train_step(TrainerState& ts, const TrainingPair& pair) {
  return train_step(ts, std::vector<const TrainingPair*>{&pair});
}

std::string checkpoint_filename(nn::Direction dir, int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "checkpoint_%s_epoch%03d.ckpt",
                nn::direction_name(dir), epoch);
  return buf;
}

TrainerState train_network(const data::DatasetSplit& split,
                           const TrainConfig& cfg, const fs::path& out_dir,
                           const fs::path& flow_cache_dir,
                           const TrainerState* resume,
                           const EpochCallback& on_epoch) {
  validate(cfg);
  PairStream stream(split, cfg, flow_cache_dir);
  if (stream.size() == 0) fail(ErrorKind::Config, "no training pairs");

  TrainerState ts;
  if (resume) {
    ts = *resume;
    if (config_hash(ts.cfg) != config_hash(cfg))
      fail(ErrorKind::Config,
           "resume checkpoint was produced with a different config");
  } else {
    ts = make_trainer_state(cfg, stream.mapping());
  }

  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path csv_path =
        out_dir / (std::string("metrics_") + nn::direction_name(cfg.direction) +
                   ".csv");
    const bool fresh = !fs::exists(csv_path) || !resume;
    csv.open(csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) csv << "epoch,step,loss_D,loss_G_adv,loss_L1\n";
  }

  char num[512];
  for (int epoch = ts.epoch; epoch < cfg.epochs; ++epoch) {
    const std::vector<std::size_t> order = stream.epoch_order(epoch);
    std::vector<TrainingPair> batch_storage;
    std::vector<const TrainingPair*> batch;
    for (std::size_t i = 0; i < order.size(); ++i) {
      batch_storage.push_back(stream.get(order[i]));
      if (static_cast<int>(batch_storage.size()) == cfg.batch_size ||
          i + 1 == order.size()) {
        batch.clear();
        for (const TrainingPair& p : batch_storage) batch.push_back(&p);
        StepMetrics m;
        try {
          m = train_step(ts, batch);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::TrainingDivergence && !out_dir.empty())
            save_checkpoint(ts, out_dir / (std::string("diverged_") +
                                           nn::direction_name(cfg.direction) +
                                           ".ckpt"));
          throw;
        }
        if (csv.is_open()) {
          std::snprintf(num, sizeof num, "%d,%llu,%.12g,%.12g,%.12g\n", epoch,
                        static_cast<unsigned long long>(ts.global_step),
                        m.loss_d, m.loss_g_adv, m.loss_l1);
          csv << num;
        }
        batch_storage.clear();
      }
    }
    ts.epoch = epoch + 1;
    if (!out_dir.empty())
      save_checkpoint(ts, out_dir / checkpoint_filename(cfg.direction,
                                                        ts.epoch));
    if (on_epoch) on_epoch(ts);
  }
  return ts;
}

void save_checkpoint(const TrainerState& ts, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    Writer w(tmp);
    w.pod(kCheckpointMagic);
    w.pod(kCheckpointVersion);
    const TrainConfig& c = ts.cfg;
    w.pod(static_cast<std::uint8_t>(c.direction));
    w.pod(static_cast<std::int32_t>(c.epochs));
    w.pod(static_cast<std::int32_t>(c.batch_size));
    w.pod(static_cast<std::uint8_t>(c.optimizer));
    w.pod(c.momentum);
    w.pod(c.learning_rate);
    w.pod(c.lambda_l1);
    w.pod(static_cast<std::int32_t>(c.resolution));
    w.pod(static_cast<std::int32_t>(c.gen_channels));
    w.pod(static_cast<std::int32_t>(c.disc_channels));
    w.pod(c.dropout);
    w.pod(c.seed);
    w.pod(static_cast<std::int32_t>(c.flow.levels));
    w.pod(static_cast<std::int32_t>(c.flow.min_size));
    w.pod(static_cast<std::int32_t>(c.flow.warps));
    w.pod(static_cast<std::int32_t>(c.flow.iterations));
    w.pod(c.flow.alpha);
    w.pod(config_hash(c));
    for (int i = 0; i < 3; ++i) w.pod(ts.mapping.lo[i]);
    for (int i = 0; i < 3; ++i) w.pod(ts.mapping.hi[i]);
    w.pod(static_cast<std::int32_t>(ts.epoch));
    w.pod(ts.global_step);
    w.pod(ts.last.loss_d);
    w.pod(ts.last.loss_g_adv);
    w.pod(ts.last.loss_l1);
    w.doubles(ts.gen.params);
    w.doubles(ts.disc.params);
    w.doubles(ts.gen_opt.m1);
    w.doubles(ts.gen_opt.m2);
    w.pod(ts.gen_opt.t);
    w.doubles(ts.disc_opt.m1);
    w.doubles(ts.disc_opt.m2);
    w.pod(ts.disc_opt.t);
    if (!w.out) {
      fail(ErrorKind::Io, "short checkpoint write: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::Io, "cannot finalize checkpoint " + path.string() + ": " +
                            ec.message());
  }
}

TrainerState load_checkpoint(const fs::path& path) {
  Reader r(path);
  std::uint32_t magic = 0, version = 0;
  r.pod(magic);
  r.pod(version);
  if (magic != kCheckpointMagic)
    fail(ErrorKind::Format, "not a checkpoint file: " + path.string());
  if (version != kCheckpointVersion)
    fail(ErrorKind::Format, "unsupported checkpoint version in " +
                                path.string());
  TrainConfig c;
  std::uint8_t dir8 = 0, opt8 = 0;
  std::int32_t i32 = 0;
  r.pod(dir8);
  c.direction = static_cast<nn::Direction>(dir8);
  r.pod(i32);
  c.epochs = i32;
  r.pod(i32);
  c.batch_size = i32;
  r.pod(opt8);
  c.optimizer = static_cast<TrainConfig::Optimizer>(opt8);
  r.pod(c.momentum);
  r.pod(c.learning_rate);
  r.pod(c.lambda_l1);
  r.pod(i32);
  c.resolution = i32;
  r.pod(i32);
  c.gen_channels = i32;
  r.pod(i32);
  c.disc_channels = i32;
  r.pod(c.dropout);
  r.pod(c.seed);
  r.pod(i32);
  c.flow.levels = i32;
  r.pod(i32);
  c.flow.min_size = i32;
  r.pod(i32);
  c.flow.warps = i32;
  r.pod(i32);
  c.flow.iterations = i32;
  r.pod(c.flow.alpha);
  std::uint64_t stored_hash = 0;
  r.pod(stored_hash);
  if (stored_hash != config_hash(c))
    fail(ErrorKind::Format, "checkpoint config hash mismatch in " +
                                path.string());

  TrainerState ts = make_trainer_state(c, flow::FlowMapping{});
  for (int i = 0; i < 3; ++i) r.pod(ts.mapping.lo[i]);
  for (int i = 0; i < 3; ++i) r.pod(ts.mapping.hi[i]);
  r.pod(i32);
  ts.epoch = i32;
  r.pod(ts.global_step);
  r.pod(ts.last.loss_d);
  r.pod(ts.last.loss_g_adv);
  r.pod(ts.last.loss_l1);
  auto expect = [&](std::vector<double> got, std::size_t want,
                    std::vector<double>& dst) {
    if (got.size() != want)
      fail(ErrorKind::Format,
           "parameter blob size mismatch in " + path.string());
    dst = std::move(got);
  };
  expect(r.doubles(), ts.gen.params.size(), ts.gen.params);
  expect(r.doubles(), ts.disc.params.size(), ts.disc.params);
  expect(r.doubles(), ts.gen_opt.m1.size(), ts.gen_opt.m1);
  expect(r.doubles(), ts.gen_opt.m2.size(), ts.gen_opt.m2);
  r.pod(ts.gen_opt.t);
  expect(r.doubles(), ts.disc_opt.m1.size(), ts.disc_opt.m1);
  expect(r.doubles(), ts.disc_opt.m2.size(), ts.disc_opt.m2);
  r.pod(ts.disc_opt.t);
  return ts;
}

}  // namespace ganom::train
