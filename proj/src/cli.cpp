// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganom/detector.hpp"
#include "ganom/error.hpp"
#include "ganom/evaluation.hpp"
#include "ganom/image.hpp"
#include "ganom/kernels.hpp"
#include "ganom/perception.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ganom::cli {

namespace {

// Guards an output directory against concurrent invocations.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".ganom.lock") {
    fs::create_directories(dir);
    if (fs::exists(path_))
      fail(ErrorKind::Config,
           "output directory is locked by another run (" + path_.string() +
               "); remove the lock if that run is gone");
    std::ofstream out(path_);
    out << "locked\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

data::SyntheticSpec parse_synthetic(const json& j) {
  data::SyntheticSpec s;
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.n_train_videos = j.value("n_train_videos", s.n_train_videos);
  s.n_test_videos = j.value("n_test_videos", s.n_test_videos);
  s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
  s.agent_count = j.value("agent_count", s.agent_count);
  s.normal_speed = j.value("normal_speed", s.normal_speed);
  if (j.contains("anomaly_type"))
    s.anomaly_type = data::anomaly_type_from_name(j["anomaly_type"]);
  s.anomaly_speed_multiplier =
      j.value("anomaly_speed_multiplier", s.anomaly_speed_multiplier);
  s.seed = j.value("seed", s.seed);
  return s;
}

flow::FlowConfig parse_flow(const json& j, flow::FlowConfig base) {
  base.levels = j.value("levels", base.levels);
  base.min_size = j.value("min_size", base.min_size);
  base.warps = j.value("warps", base.warps);
  base.iterations = j.value("iterations", base.iterations);
  base.alpha = j.value("alpha", base.alpha);
  return base;
}

train::TrainConfig parse_train(const json& j, train::TrainConfig base) {
  base.epochs = j.value("epochs", base.epochs);
  base.batch_size = j.value("batch_size", base.batch_size);
  if (j.contains("optimizer")) {
    const std::string o = j["optimizer"];
    if (o == "sgd_momentum" || o == "sgd")
      base.optimizer = train::TrainConfig::Optimizer::SgdMomentum;
    else if (o == "adam")
      base.optimizer = train::TrainConfig::Optimizer::Adam;
    else
      fail(ErrorKind::Config, "unknown optimizer: " + o);
  }
  base.momentum = j.value("momentum", base.momentum);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.lambda_l1 = j.value("lambda_l1", base.lambda_l1);
  base.resolution = j.value("resolution", base.resolution);
  base.gen_channels = j.value("gen_channels", base.gen_channels);
  base.disc_channels = j.value("disc_channels", base.disc_channels);
  base.dropout = j.value("dropout", base.dropout);
  return base;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format,
         "bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

fs::path flow_cache_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("GANOM_CACHE_DIR"))
    return fs::path(env) / "flow";
  return cfg.out / "flow_cache";
}

const data::VideoSequence* find_video(const data::DatasetSplit& split,
                                      const std::string& id) {
  for (const auto& v : split.test)
    if (v.id == id) return &v;
  return nullptr;
}

std::vector<fs::path> sorted_matching(const fs::path& dir,
                                      const std::string& prefix,
                                      const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ext)
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// subcommands

struct CommonOpts {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<double> lambda;
  bool force = false;
  bool deterministic = false;
  int threads = 0;
};

RunConfig effective_config(const CommonOpts& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = load_run_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train_f2o.seed = *o.seed;
    cfg.train_o2f.seed = *o.seed;
  }
  if (o.out) cfg.out = *o.out;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.threads > 0) core::set_threads(o.threads);
  if (o.deterministic) core::set_threads(1);
  return cfg;
}

int cmd_synthesize(const CommonOpts& common, const fs::path& spec_path,
                   const fs::path& out_dir) {
  json j = load_json(spec_path);
  data::SyntheticSpec spec =
      parse_synthetic(j.contains("synthetic") ? j["synthetic"] : j);
  if (common.seed) spec.seed = *common.seed;
  data::validate_spec(spec);
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    if (!common.force)
      fail(ErrorKind::Config, "output directory " + out_dir.string() +
                                  " is not empty (use --force to replace)");
    fs::remove_all(out_dir);
  }
  fs::create_directories(out_dir);
  DirLock lock(out_dir);
  data::DatasetSplit split = data::generate_synthetic_corpus(spec);
  data::write_corpus(split, &spec, out_dir);
  std::printf("synthesized %zu train / %zu test videos at %dx%d under %s\n",
              split.train.size(), split.test.size(), spec.width, spec.height,
              out_dir.string().c_str());
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& direction,
              bool resume) {
  RunConfig cfg = effective_config(common);
  const nn::Direction dir = nn::direction_from_name(direction);
  data::DatasetSplit split = load_dataset(cfg);
  train::TrainConfig tc =
      dir == nn::Direction::FrameToFlow ? cfg.train_f2o : cfg.train_o2f;
  tc.direction = dir;
  DirLock lock(cfg.out);

  train::TrainerState resumed;
  const train::TrainerState* resume_ptr = nullptr;
  if (resume) {
    fs::path latest;
    for (int e = tc.epochs; e >= 1; --e) {
      fs::path p = cfg.out / train::checkpoint_filename(dir, e);
      if (fs::exists(p)) {
        latest = p;
        break;
      }
    }
    if (latest.empty())
      fail(ErrorKind::Config, "no checkpoint to resume from in " +
                                  cfg.out.string());
    resumed = train::load_checkpoint(latest);
    resume_ptr = &resumed;
    std::printf("resuming from %s (epoch %d)\n", latest.string().c_str(),
                resumed.epoch);
  }

  train::TrainerState ts = train::train_network(
      split, tc, cfg.out, flow_cache_dir(cfg), resume_ptr,
      [&](const train::TrainerState& s) {
        std::printf("epoch %d/%d  loss_D=%.4f  loss_G_adv=%.4f  loss_L1=%.4f\n",
                    s.epoch, s.cfg.epochs, s.last.loss_d, s.last.loss_g_adv,
                    s.last.loss_l1);
        std::fflush(stdout);
      });
  const fs::path final_path =
      cfg.out / train::checkpoint_filename(dir, ts.epoch);
  std::printf("checkpoint: %s\n", final_path.string().c_str());
  return 0;
}

int cmd_detect(const CommonOpts& common, const fs::path& f2o_path,
               const fs::path& o2f_path, const std::string& video_filter,
               const std::string& channel, bool no_dropout,
               bool dump_channels) {
  RunConfig cfg = effective_config(common);
  data::DatasetSplit split = load_dataset(cfg);
  if (split.test.empty()) fail(ErrorKind::Config, "dataset has no test videos");

  train::TrainerState f2o = train::load_checkpoint(f2o_path);
  train::TrainerState o2f = train::load_checkpoint(o2f_path);
  if (f2o.gen.direction != nn::Direction::FrameToFlow)
    fail(ErrorKind::Config,
         "--f2o checkpoint has direction " +
             std::string(nn::direction_name(f2o.gen.direction)) +
             " (checkpoints swapped?)");
  if (o2f.gen.direction != nn::Direction::FlowToFrame)
    fail(ErrorKind::Config,
         "--o2f checkpoint has direction " +
             std::string(nn::direction_name(o2f.gen.direction)) +
             " (checkpoints swapped?)");

  auto extractor = percept::make_extractor(cfg.extractor);
  DirLock lock(cfg.out);
  const fs::path maps_root = cfg.out / "maps";
  fs::create_directories(maps_root);

  det::DetectOptions opts;
  opts.lambda = cfg.lambda;
  opts.dropout = cfg.test_dropout && !no_dropout;
  opts.seed = cfg.seed;
  opts.keep_channels = dump_channels || channel != "fused";
  opts.flow_cache_dir = flow_cache_dir(cfg);

  json manifest_all;
  for (const auto& video : split.test) {
    if (!video_filter.empty() && video.id != video_filter) continue;
    det::DetectResult res =
        det::detect_video(video, f2o, o2f, *extractor, opts);
    const fs::path vdir = maps_root / video.id;
    fs::create_directories(vdir);
    double scale = 0.0;
    for (const auto& m : res.maps) scale = std::max(scale, m.map.max_value());
    char name[64];
    for (std::size_t t = 0; t < res.maps.size(); ++t) {
      const Tensor* out_map = &res.maps[t].map;
      if (channel == "flow") out_map = &res.n_o[t];
      if (channel == "appearance") out_map = &res.n_s[t];
      std::snprintf(name, sizeof name, "A_%04zu.amp", t);
      det::write_map(*out_map, vdir / name);
      std::snprintf(name, sizeof name, "heat_%04zu.png", t);
      img::save_heatmap_png(*out_map, scale > 0 ? scale : 1.0, vdir / name);
      if (dump_channels) {
        std::snprintf(name, sizeof name, "NO_%04zu.amp", t);
        det::write_map(res.n_o[t], vdir / name);
        std::snprintf(name, sizeof name, "NS_%04zu.amp", t);
        det::write_map(res.n_s[t], vdir / name);
      }
    }
    json jm;
    jm["video"] = video.id;
    jm["lambda"] = opts.lambda;
    jm["channel"] = channel;
    jm["m_O"] = res.normalizer.m_o;
    jm["m_S"] = res.normalizer.m_s;
    jm["n_maps"] = res.maps.size();
    jm["n_frames"] = video.frames.size();
    jm["heat_scale"] = scale;
    std::ofstream mout(vdir / "manifest.json");
    mout << jm.dump(2) << '\n';
    manifest_all["videos"].push_back(jm);
    std::printf("detected %s: %zu maps (m_O=%.6g, m_S=%.6g)\n",
                video.id.c_str(), res.maps.size(), res.normalizer.m_o,
                res.normalizer.m_s);
  }
  if (!manifest_all.contains("videos"))
    fail(ErrorKind::Config, "no test video matched '" + video_filter + "'");
  std::ofstream mout(maps_root / "manifest.json");
  mout << manifest_all.dump(2) << '\n';
  return 0;
}

std::vector<Tensor> load_video_maps(const fs::path& vdir) {
  std::vector<Tensor> maps;
  for (const fs::path& p : sorted_matching(vdir, "A_", ".amp"))
    maps.push_back(det::load_map(p));
  return maps;
}

int cmd_evaluate(const CommonOpts& common, const fs::path& maps_dir,
                 const std::string& protocol) {
  RunConfig cfg = effective_config(common);
  data::DatasetSplit split = load_dataset(cfg);
  const fs::path maps_root =
      fs::is_directory(maps_dir / "maps") ? maps_dir / "maps" : maps_dir;

  std::vector<std::vector<Tensor>> storage;
  storage.reserve(split.test.size());
  std::vector<eval::EvaluationInput> inputs;
  for (const auto& video : split.test) {
    const fs::path vdir = maps_root / video.id;
    if (!fs::is_directory(vdir)) continue;
    std::vector<Tensor> maps = load_video_maps(vdir);
    if (maps.empty()) continue;
    if (!video.ground_truth)
      fail(ErrorKind::GroundTruthMissing,
           "video " + video.id + " has no ground truth");
    storage.push_back(std::move(maps));
    inputs.push_back(
        {video.id, &storage.back(), &*video.ground_truth});
  }
  if (inputs.empty())
    fail(ErrorKind::Config, "no map directories under " + maps_root.string());

  std::vector<eval::MetricReport> reports;
  if (protocol == "frame" || protocol == "both")
    reports.push_back(eval::evaluate(inputs, eval::Protocol::FrameLevel));
  if (protocol == "pixel" || protocol == "both")
    reports.push_back(eval::evaluate(inputs, eval::Protocol::PixelLevel));
  if (reports.empty())
    fail(ErrorKind::Config, "protocol must be frame, pixel or both");

  fs::create_directories(cfg.out);
  const std::string dataset_name =
      cfg.dataset_root ? cfg.dataset_root->filename().string() : "synthetic";
  eval::write_report_csv(reports, dataset_name, cfg.out / "metrics.csv");
  eval::write_summary_json(reports, dataset_name, cfg.out / "summary.json");
  for (const auto& r : reports)
    std::printf("%s: AUC=%.4f EER=%.4f\n", eval::protocol_name(r.protocol),
                r.auc, r.eer);
  return 0;
}

int cmd_visualize(const CommonOpts& common, const fs::path& maps_dir,
                  const std::string& video_filter,
                  std::optional<double> threshold) {
  RunConfig cfg = effective_config(common);
  data::DatasetSplit split = load_dataset(cfg);
  const fs::path maps_root =
      fs::is_directory(maps_dir / "maps") ? maps_dir / "maps" : maps_dir;
  fs::create_directories(cfg.out / "overlays");

  bool any = false;
  for (const auto& video : split.test) {
    if (!video_filter.empty() && video.id != video_filter) continue;
    const fs::path vdir = maps_root / video.id;
    if (!fs::is_directory(vdir)) continue;
    std::vector<Tensor> maps = load_video_maps(vdir);
    if (maps.empty()) continue;
    if (maps.size() != video.frames.size() &&
        maps.size() + 1 != video.frames.size())
      fail(ErrorKind::Config, "map/frame count mismatch for " + video.id);
    any = true;

    double thr;
    if (threshold) {
      thr = *threshold;
    } else if (video.ground_truth) {
      // EER-optimal display threshold from this video's frame-level ROC.
      eval::AlignedVideo av = eval::align_video(maps, *video.ground_truth);
      try {
        eval::RocCurve curve = eval::frame_level_roc(av.scores, av.labels);
        thr = curve.points.front().threshold;
        double best = 2.0;
        for (const eval::RocPoint& p : curve.points) {
          if (!std::isfinite(p.threshold)) continue;
          const double miss = std::abs(p.fpr - (1.0 - p.tpr));
          if (miss < best) {
            best = miss;
            thr = p.threshold;
          }
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedMetric) throw;
        double mx = 0;
        for (const Tensor& m : maps) mx = std::max(mx, m.max_value());
        thr = 0.5 * mx;
      }
    } else {
      double mx = 0;
      for (const Tensor& m : maps) mx = std::max(mx, m.max_value());
      thr = 0.5 * mx;
    }

    const fs::path odir = cfg.out / "overlays" / video.id;
    fs::create_directories(odir);
    char name[64];
    for (std::size_t t = 0; t < video.frames.size(); ++t) {
      const Tensor& m = maps[std::min(t, maps.size() - 1)];
      std::snprintf(name, sizeof name, "overlay_%04zu.png", t);
      img::save_overlay_png(video.frames[t], m, thr, odir / name);
    }
    std::printf("visualized %s (threshold %.4f) -> %s\n", video.id.c_str(),
                thr, odir.string().c_str());
  }
  if (!any)
    fail(ErrorKind::Config, "no maps found under " + maps_root.string());
  return 0;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  json j = load_json(path);
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("out")) cfg.out = fs::path(j["out"].get<std::string>());
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.extractor = j.value("extractor", cfg.extractor);
  cfg.test_dropout = j.value("test_dropout", cfg.test_dropout);
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    if (d.contains("root"))
      cfg.dataset_root = fs::path(d["root"].get<std::string>());
    if (d.contains("synthetic")) cfg.synthetic = parse_synthetic(d["synthetic"]);
  }
  if (j.contains("flow")) cfg.flow = parse_flow(j["flow"], cfg.flow);

  train::TrainConfig base;
  base.seed = cfg.seed;
  base.flow = cfg.flow;
  if (j.contains("train")) base = parse_train(j["train"], base);
  cfg.train_f2o = j.contains("train_f2o")
                      ? parse_train(j["train_f2o"], base)
                      : base;
  cfg.train_o2f = j.contains("train_o2f")
                      ? parse_train(j["train_o2f"], base)
                      : base;
  cfg.train_f2o.direction = nn::Direction::FrameToFlow;
  cfg.train_o2f.direction = nn::Direction::FlowToFrame;
  return cfg;
}

data::DatasetSplit load_dataset(const RunConfig& cfg) {
  if (cfg.dataset_root) {
    if (!fs::is_directory(*cfg.dataset_root))
      fail(ErrorKind::Config,
           "dataset root does not exist: " + cfg.dataset_root->string());
    return data::load_ucsd_layout(*cfg.dataset_root);
  }
  if (cfg.synthetic) return data::generate_synthetic_corpus(*cfg.synthetic);
  fail(ErrorKind::Config,
       "config names no dataset (want dataset.root or dataset.synthetic)");
}

int run(const std::vector<std::string>& args) {
  CLI::App app{
      "Cross-channel GAN anomaly detection: train on normal videos, detect "
      "via reconstruction-difference heatmaps"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config, "JSON run configuration");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "override config seed");
  fs::path out_val;
  auto* out_opt = app.add_option("--out", out_val, "output directory");
  double lambda_val = 2.0;
  auto* lambda_opt =
      app.add_option("--lambda", lambda_val, "fusion weight for N_O");
  app.add_flag("--force", common.force, "overwrite existing outputs");
  app.add_flag("--deterministic", common.deterministic,
               "single-threaded execution (results are deterministic either "
               "way; this pins the thread count)");
  app.add_option("--threads", common.threads, "OpenMP thread count");

  auto* syn = app.add_subcommand("synthesize", "write a synthetic corpus");
  fs::path spec_path, syn_out;
  syn->add_option("--spec", spec_path, "SyntheticSpec JSON")->required();
  syn->add_option("--out-dir", syn_out, "corpus directory")->required();

  auto* tr = app.add_subcommand("train", "train one network");
  std::string direction;
  bool resume = false;
  tr->add_option("--direction", direction, "F2O or O2F")->required();
  tr->add_flag("--resume", resume, "continue from the stored checkpoint");

  auto* de = app.add_subcommand("detect", "produce abnormality maps");
  fs::path f2o_path, o2f_path;
  std::string video_filter, channel = "fused";
  bool no_dropout = false, dump_channels = false;
  de->add_option("--f2o", f2o_path, "F2O checkpoint")->required();
  de->add_option("--o2f", o2f_path, "O2F checkpoint")->required();
  de->add_option("--video", video_filter, "restrict to one test video");
  de->add_option("--channel", channel, "fused | flow | appearance");
  de->add_flag("--no-dropout", no_dropout, "disable test-time dropout noise");
  de->add_flag("--dump-channels", dump_channels,
               "also write per-channel N_O / N_S maps");

  auto* ev = app.add_subcommand("evaluate", "run the evaluation protocols");
  fs::path maps_dir;
  std::string protocol = "both";
  ev->add_option("--maps", maps_dir, "detect output directory")->required();
  ev->add_option("--protocol", protocol, "frame | pixel | both");

  auto* vi = app.add_subcommand("visualize", "render overlay images");
  fs::path vis_maps;
  std::string vis_video;
  double vis_threshold = -1.0;
  auto* thr_opt = vi->add_option("--threshold", vis_threshold,
                                 "display threshold (default: EER-optimal)");
  vi->add_option("--maps", vis_maps, "detect output directory")->required();
  vi->add_option("--video", vis_video, "restrict to one test video");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (seed_opt->count()) common.seed = seed_val;
  if (out_opt->count()) common.out = out_val;
  if (lambda_opt->count()) common.lambda = lambda_val;

  try {
    if (syn->parsed()) return cmd_synthesize(common, spec_path, syn_out);
    if (tr->parsed()) return cmd_train(common, direction, resume);
    if (de->parsed())
      return cmd_detect(common, f2o_path, o2f_path, video_filter, channel,
                        no_dropout, dump_channels);
    if (ev->parsed()) return cmd_evaluate(common, maps_dir, protocol);
    if (vi->parsed())
      return cmd_visualize(common, vis_maps, vis_video,
                           thr_opt->count()
                               ? std::optional<double>(vis_threshold)
                               : std::nullopt);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", error_kind_name(e.kind()),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace ganom::cli
