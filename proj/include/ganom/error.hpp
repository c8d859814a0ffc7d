// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ganom {

// Error categories used across the pipeline. Tests match on the kind, the
// message is for humans.
enum class ErrorKind {
  Config,
  Shape,
  Format,
  Numeric,
  Io,
  DegenerateVideo,
  GroundTruthMissing,
  TrainingDivergence,
  UndefinedMetric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Format: return "format";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
    case ErrorKind::DegenerateVideo: return "degenerate-video";
    case ErrorKind::GroundTruthMissing: return "ground-truth-missing";
    case ErrorKind::TrainingDivergence: return "training-divergence";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
  }
  return "unknown";
}

}  // namespace ganom
