// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <json.hpp>

#include "ganom/error.hpp"
#include "ganom/image.hpp"

namespace fs = std::filesystem;

namespace ganom::data {

namespace {

const char* kFrameExts[] = {".tif", ".tiff", ".png", ".bmp", ".jpg", ".jpeg"};

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return std::find(std::begin(kFrameExts), std::end(kFrameExts), ext) !=
         std::end(kFrameExts);
}

// Last run of digits in the stem; -1 when there is none.
long numeric_stem(const fs::path& p) {
  std::string stem = p.stem().string();
  long value = -1;
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(stem[i]))) continue;
    std::size_t j = i;
    long v = 0;
    while (j < stem.size() && std::isdigit(static_cast<unsigned char>(stem[j])))
      v = v * 10 + (stem[j++] - '0');
    value = v;
    i = j;
  }
  return value;
}

std::vector<fs::path> sorted_frame_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_frame_file(e.path())) files.push_back(e.path());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    long na = numeric_stem(a), nb = numeric_stem(b);
    if (na != nb) return na < nb;
    return a.filename().string() < b.filename().string();
  });
  return files;
}

VideoSequence load_video_dir(const fs::path& dir,
                             std::map<long, int>* stem_to_pos = nullptr) {
  VideoSequence video;
  video.id = dir.filename().string();
  int idx = 0;
  for (const fs::path& p : sorted_frame_files(dir)) {
    if (stem_to_pos) (*stem_to_pos)[numeric_stem(p)] = idx;
    Frame f = img::load_frame(p);
    f.index = idx++;
    f.video_id = video.id;
    video.frames.push_back(std::move(f));
  }
  return video;
}

void attach_ground_truth(VideoSequence& video,
                         const std::map<long, int>& stem_to_pos,
                         const fs::path& mask_dir, const fs::path& label_file,
                         bool* warning) {
  const int T = static_cast<int>(video.frames.size());
  GroundTruth gt;
  gt.frame_labels.assign(T, 0);
  gt.pixel_masks.assign(T, {});
  bool have_any = false;

  if (fs::is_directory(mask_dir)) {
    // Mask files pair with the frame that carries the same numeric stem.
    for (const fs::path& p : sorted_frame_files(mask_dir)) {
      auto it = stem_to_pos.find(numeric_stem(p));
      if (it == stem_to_pos.end()) continue;
      const int t = it->second;
      int mh = 0, mw = 0;
      auto mask = img::load_mask(p, &mh, &mw);
      if (mh != video.height() || mw != video.width())
        fail(ErrorKind::Format, "mask dimensions differ from frames in " +
                                    mask_dir.string());
      gt.mask_h = mh;
      gt.mask_w = mw;
      bool nonempty = std::any_of(mask.begin(), mask.end(),
                                  [](std::uint8_t m) { return m; });
      if (nonempty) {
        gt.pixel_masks[t] = std::move(mask);
        gt.frame_labels[t] = 1;
      }
      have_any = true;
    }
  }

  if (fs::is_regular_file(label_file)) {
    std::ifstream in(label_file);
    std::string line;
    std::vector<std::uint8_t> labels;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line[0] != '0' && line[0] != '1')
        fail(ErrorKind::Format, "label file expects 0/1 lines: " +
                                    label_file.string());
      labels.push_back(line[0] == '1');
    }
    if (static_cast<int>(labels.size()) != T)
      fail(ErrorKind::Format,
           "label count does not match frame count in " + label_file.string());
    for (int t = 0; t < T; ++t) {
      if (!labels[t] && gt.frame_labels[t])
        fail(ErrorKind::Format, "frame " + std::to_string(t) + " of " +
                                    video.id +
                                    " has abnormal pixels but a 0 label");
      gt.frame_labels[t] = labels[t];
    }
    have_any = true;
  }

  if (have_any) {
    if (gt.mask_h == 0) {
      gt.mask_h = video.height();
      gt.mask_w = video.width();
    }
    video.ground_truth = std::move(gt);
  } else {
    *warning = true;
  }
}

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

bool is_gt_dir(const fs::path& p) {
  std::string name = p.filename().string();
  return name.size() > 3 && name.substr(name.size() - 3) == "_gt";
}

}  // namespace

DatasetSplit load_ucsd_layout(const fs::path& root) {
  if (!fs::is_directory(root))
    fail(ErrorKind::Config, "dataset root does not exist: " + root.string());
  const fs::path train_root = root / "Train";
  const fs::path test_root = root / "Test";
  if (!fs::is_directory(train_root))
    fail(ErrorKind::Config, "missing Train/ under " + root.string());

  DatasetSplit split;
  for (const fs::path& dir : sorted_subdirs(train_root)) {
    VideoSequence v = load_video_dir(dir);
    if (v.frames.size() < 2)
      fail(ErrorKind::DegenerateVideo,
           "train video too short for flow: " + dir.string());
    split.train.push_back(std::move(v));
  }
  if (split.train.empty())
    fail(ErrorKind::Config, "no train videos under " + train_root.string());

  if (fs::is_directory(test_root)) {
    for (const fs::path& dir : sorted_subdirs(test_root)) {
      if (is_gt_dir(dir)) continue;
      std::map<long, int> stems;
      VideoSequence v = load_video_dir(dir, &stems);
      if (v.frames.size() < 2)
        fail(ErrorKind::DegenerateVideo,
             "test video too short for flow: " + dir.string());
      fs::path mask_dir = dir.parent_path() / (v.id + "_gt");
      fs::path label_file = dir.parent_path() / (v.id + "_gt.txt");
      attach_ground_truth(v, stems, mask_dir, label_file, &split.gt_warning);
      split.test.push_back(std::move(v));
    }
  }
  return split;
}

void write_corpus(const DatasetSplit& split, const SyntheticSpec* spec,
                  const fs::path& root) {
  fs::create_directories(root / "Train");
  if (!split.test.empty()) fs::create_directories(root / "Test");
  char buf[64];
  for (const VideoSequence& v : split.train) {
    fs::path dir = root / "Train" / v.id;
    fs::create_directories(dir);
    for (const Frame& f : v.frames) {
      std::snprintf(buf, sizeof buf, "%03d.png", f.index);
      img::save_frame_png(f, dir / buf);
    }
  }
  for (const VideoSequence& v : split.test) {
    fs::path dir = root / "Test" / v.id;
    fs::create_directories(dir);
    for (const Frame& f : v.frames) {
      std::snprintf(buf, sizeof buf, "%03d.png", f.index);
      img::save_frame_png(f, dir / buf);
    }
    if (v.ground_truth) {
      const GroundTruth& gt = *v.ground_truth;
      fs::path gt_dir = root / "Test" / (v.id + "_gt");
      fs::create_directories(gt_dir);
      std::vector<std::uint8_t> empty(
          static_cast<std::size_t>(gt.mask_h) * gt.mask_w, 0);
      for (std::size_t t = 0; t < gt.pixel_masks.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%03d.png", static_cast<int>(t));
        const auto& m = gt.pixel_masks[t].empty() ? empty : gt.pixel_masks[t];
        img::save_mask_png(m, gt.mask_h, gt.mask_w, gt_dir / buf);
      }
      std::ofstream out(root / "Test" / (v.id + "_gt.txt"));
      for (std::uint8_t l : gt.frame_labels) out << (l ? '1' : '0') << '\n';
    }
  }
  if (spec) {
    nlohmann::json j;
    j["height"] = spec->height;
    j["width"] = spec->width;
    j["n_train_videos"] = spec->n_train_videos;
    j["n_test_videos"] = spec->n_test_videos;
    j["frames_per_video"] = spec->frames_per_video;
    j["agent_count"] = spec->agent_count;
    j["normal_speed"] = spec->normal_speed;
    j["anomaly_type"] = anomaly_type_name(spec->anomaly_type);
    j["anomaly_speed_multiplier"] = spec->anomaly_speed_multiplier;
    j["seed"] = spec->seed;
    std::ofstream out(root / "spec.json");
    out << j.dump(2) << '\n';
  }
}

std::optional<SyntheticSpec> read_spec_sidecar(const fs::path& root) {
  fs::path p = root / "spec.json";
  if (!fs::is_regular_file(p)) return std::nullopt;
  std::ifstream in(p);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "bad spec.json: " + std::string(e.what()));
  }
  SyntheticSpec spec;
  spec.height = j.value("height", spec.height);
  spec.width = j.value("width", spec.width);
  spec.n_train_videos = j.value("n_train_videos", spec.n_train_videos);
  spec.n_test_videos = j.value("n_test_videos", spec.n_test_videos);
  spec.frames_per_video = j.value("frames_per_video", spec.frames_per_video);
  spec.agent_count = j.value("agent_count", spec.agent_count);
  spec.normal_speed = j.value("normal_speed", spec.normal_speed);
  if (j.contains("anomaly_type"))
    spec.anomaly_type = anomaly_type_from_name(j["anomaly_type"]);
  spec.anomaly_speed_multiplier =
      j.value("anomaly_speed_multiplier", spec.anomaly_speed_multiplier);
  spec.seed = j.value("seed", spec.seed);
  return spec;
}

std::vector<std::pair<const Frame*, const Frame*>> pair_frames(
    const VideoSequence& video) {
  if (video.frames.size() < 2)
    fail(ErrorKind::DegenerateVideo,
         "video " + video.id + " too short for flow pairs");
  std::vector<std::pair<const Frame*, const Frame*>> pairs;
  pairs.reserve(video.frames.size() - 1);
  for (std::size_t t = 0; t + 1 < video.frames.size(); ++t)
    pairs.emplace_back(&video.frames[t], &video.frames[t + 1]);
  return pairs;
}

}  // namespace ganom::data
