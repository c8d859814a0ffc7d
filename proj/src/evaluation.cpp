// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#include "ganom/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "ganom/error.hpp"

namespace ganom::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void both_classes_or_throw(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorKind::UndefinedMetric,
         "ROC needs both classes (got " + std::to_string(n_pos) +
             " abnormal, " + std::to_string(n_neg) + " normal frames)");
}

}  // namespace

const char* protocol_name(Protocol p) {
  return p == Protocol::FrameLevel ? "frame_level" : "pixel_level";
}

std::vector<double> frame_scores(const std::vector<det::AbnormalityMap>& maps) {
  if (maps.empty()) fail(ErrorKind::Config, "frame_scores: no maps");
  std::vector<double> scores;
  scores.reserve(maps.size());
  for (const det::AbnormalityMap& m : maps) scores.push_back(m.map.max_value());
  return scores;
}

RocCurve frame_level_roc(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    fail(ErrorKind::Shape, "scores/labels length mismatch");
  if (scores.empty()) fail(ErrorKind::Config, "empty score list");
  std::size_t n_pos = 0;
  for (std::uint8_t l : labels) n_pos += l ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  both_classes_or_throw(n_pos, n_neg);

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve curve;
  curve.points.push_back({kInf, 0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      if (labels[order[i]])
        ++tp;
      else
        ++fp;
      ++i;
    }
    curve.points.push_back({thr, static_cast<double>(fp) / n_neg,
                            static_cast<double>(tp) / n_pos});
  }
  curve.points.push_back({-kInf, 1.0, 1.0});
  return curve;
}

bool covers_enough(std::size_t covered, std::size_t gt_size) {
  return 5 * covered >= 2 * gt_size;  // covered >= 40% of |GT|, inclusive
}

RocCurve pixel_level_roc(const std::vector<EvalFrame>& frames,
                         const PixelRocOptions& opts) {
  if (frames.empty()) fail(ErrorKind::Config, "pixel_level_roc: no frames");

  struct Prepared {
    double max = 0;
    bool label = false;
    std::vector<double> gt_values;  // ascending map values on GT pixels
  };
  std::vector<Prepared> prep;
  std::size_t n_pos = 0, n_neg = 0;
  for (const EvalFrame& f : frames) {
    if (!f.map) fail(ErrorKind::Config, "pixel_level_roc: missing map");
    Prepared p;
    p.label = f.label;
    p.max = f.map->max_value();
    if (f.label) {
      ++n_pos;
      if (!f.mask || f.mask->empty())
        fail(ErrorKind::GroundTruthMissing,
             "abnormal frame lacks a pixel mask");
      if (f.mask_h != f.map->h || f.mask_w != f.map->w)
        fail(ErrorKind::Shape, "mask and map dimensions differ");
      for (int y = 0; y < f.mask_h; ++y)
        for (int x = 0; x < f.mask_w; ++x)
          if ((*f.mask)[static_cast<std::size_t>(y) * f.mask_w + x])
            p.gt_values.push_back(f.map->at(0, y, x));
      if (p.gt_values.empty())
        fail(ErrorKind::GroundTruthMissing, "abnormal frame has empty mask");
      std::sort(p.gt_values.begin(), p.gt_values.end());
    } else {
      ++n_neg;
    }
    prep.push_back(std::move(p));
  }
  both_classes_or_throw(n_pos, n_neg);

  std::vector<double> thresholds;
  for (const Prepared& p : prep) thresholds.push_back(p.max);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  RocCurve curve;
  curve.points.push_back({kInf, 0.0, 0.0});
  for (double thr : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (const Prepared& p : prep) {
      const bool flagged = p.max >= thr;  // predicted set nonempty
      if (!p.label) {
        if (flagged) ++fp;
        continue;
      }
      std::size_t covered =
          p.gt_values.end() -
          std::lower_bound(p.gt_values.begin(), p.gt_values.end(), thr);
      if (covers_enough(covered, p.gt_values.size())) {
        ++tp;
      } else if (flagged && opts.failed_overlap_counts_fp) {
        ++fp;
      }
    }
    curve.points.push_back({thr,
                            std::min(1.0, static_cast<double>(fp) / n_neg),
                            static_cast<double>(tp) / n_pos});
  }
  curve.points.push_back({-kInf, 1.0, 1.0});
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const RocPoint& a, const RocPoint& b) {
                     if (a.fpr != b.fpr) return a.fpr < b.fpr;
                     return a.tpr < b.tpr;
                   });
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.points.size() < 2)
    fail(ErrorKind::Config, "auc: degenerate curve");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return area;
}

double eer(const RocCurve& curve) {
  if (curve.points.size() < 2)
    fail(ErrorKind::Config, "eer: degenerate curve");
  // g = FPR - (1 - TPR) is nondecreasing along the curve; the EER sits at
  // its zero crossing, interpolated linearly between adjacent points.
  auto g = [](const RocPoint& p) { return p.fpr + p.tpr - 1.0; };
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    const double ga = g(a), gb = g(b);
    if (gb < 0) continue;
    if (ga > 0) return a.fpr;  // crossing preceded the first point
    if (ga == gb) return a.fpr;
    const double t = (0.0 - ga) / (gb - ga);
    return a.fpr + t * (b.fpr - a.fpr);
  }
  return curve.points.back().fpr;
}

AlignedVideo align_video(const std::vector<Tensor>& maps,
                         const data::GroundTruth& gt) {
  const std::size_t T = gt.frame_labels.size();
  if (maps.empty()) fail(ErrorKind::Config, "align_video: no maps");
  if (maps.size() != T && maps.size() + 1 != T)
    fail(ErrorKind::Shape,
         "map count " + std::to_string(maps.size()) +
             " does not align with " + std::to_string(T) + " labels");
  AlignedVideo out;
  const bool masks_sized = !gt.pixel_masks.empty();
  auto push = [&](std::size_t map_idx, std::size_t label_idx) {
    EvalFrame f;
    f.map = &maps[map_idx];
    f.label = gt.frame_labels[label_idx] != 0;
    if (masks_sized && label_idx < gt.pixel_masks.size() &&
        !gt.pixel_masks[label_idx].empty()) {
      f.mask = &gt.pixel_masks[label_idx];
      f.mask_h = gt.mask_h;
      f.mask_w = gt.mask_w;
    }
    out.frames.push_back(f);
    out.scores.push_back(maps[map_idx].max_value());
    out.labels.push_back(f.label ? 1 : 0);
  };
  for (std::size_t t = 0; t < maps.size(); ++t) push(t, t);
  // Terminal frame has no flow; it inherits the last map and its label.
  if (maps.size() + 1 == T) push(maps.size() - 1, maps.size() - 1);
  return out;
}

MetricReport evaluate(const std::vector<EvaluationInput>& inputs,
                      Protocol protocol, const PixelRocOptions& opts) {
  if (inputs.empty()) fail(ErrorKind::Config, "evaluate: no inputs");
  MetricReport report;
  report.protocol = protocol;

  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  std::vector<EvalFrame> all_frames;
  std::vector<AlignedVideo> aligned;
  aligned.reserve(inputs.size());
  for (const EvaluationInput& in : inputs) {
    if (!in.gt)
      fail(ErrorKind::GroundTruthMissing,
           "video " + in.video_id + " has no ground truth");
    aligned.push_back(align_video(*in.maps, *in.gt));
    const AlignedVideo& av = aligned.back();
    all_scores.insert(all_scores.end(), av.scores.begin(), av.scores.end());
    all_labels.insert(all_labels.end(), av.labels.begin(), av.labels.end());
    all_frames.insert(all_frames.end(), av.frames.begin(), av.frames.end());
  }

  auto run = [&](const std::vector<double>& s,
                 const std::vector<std::uint8_t>& l,
                 const std::vector<EvalFrame>& f, double* auc_out,
                 double* eer_out) {
    RocCurve curve = protocol == Protocol::FrameLevel
                         ? frame_level_roc(s, l)
                         : pixel_level_roc(f, opts);
    *auc_out = auc(curve);
    *eer_out = eer(curve);
  };

  run(all_scores, all_labels, all_frames, &report.auc, &report.eer);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    VideoMetrics vm;
    vm.video = inputs[i].video_id;
    try {
      run(aligned[i].scores, aligned[i].labels, aligned[i].frames, &vm.auc,
          &vm.eer);
      vm.defined = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedMetric) throw;
    }
    report.per_video.push_back(std::move(vm));
  }
  return report;
}

void write_report_csv(const std::vector<MetricReport>& reports,
                      const std::string& dataset,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write report: " + path.string());
  out << "protocol,dataset,video,auc,eer\n";
  char buf[256];
  for (const MetricReport& r : reports) {
    for (const VideoMetrics& v : r.per_video) {
      if (!v.defined) {
        out << protocol_name(r.protocol) << ',' << dataset << ',' << v.video
            << ",nan,nan\n";
        continue;
      }
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%.6f\n",
                    protocol_name(r.protocol), dataset.c_str(),
                    v.video.c_str(), v.auc, v.eer);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%s,ALL,%.6f,%.6f\n",
                  protocol_name(r.protocol), dataset.c_str(), r.auc, r.eer);
    out << buf;
  }
}

void write_summary_json(const std::vector<MetricReport>& reports,
                        const std::string& dataset,
                        const std::filesystem::path& path) {
  nlohmann::json j;
  j["dataset"] = dataset;
  for (const MetricReport& r : reports) {
    nlohmann::json jr;
    jr["auc"] = r.auc;
    jr["eer"] = r.eer;
    for (const VideoMetrics& v : r.per_video) {
      nlohmann::json jv;
      jv["video"] = v.video;
      if (v.defined) {
        jv["auc"] = v.auc;
        jv["eer"] = v.eer;
      }
      jr["videos"].push_back(jv);
    }
    j[protocol_name(r.protocol)] = jr;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write summary: " + path.string());
  out << j.dump(2) << '\n';
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write roc: " + path.string());
  out << "threshold,fpr,tpr\n";
  char buf[160];
  for (const RocPoint& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9f,%.9f\n", p.threshold, p.fpr,
                  p.tpr);
    out << buf;
  }
}

}  // namespace ganom::eval
