// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ganom/dataset.hpp"
#include "ganom/gan.hpp"
#include "ganom/optflow.hpp"

namespace ganom::train {

struct TrainConfig {
  nn::Direction direction = nn::Direction::FrameToFlow;
  int epochs = 10;
  int batch_size = 1;
  // The paper's recipe is plain momentum SGD (momentum 0.5, batch 1); adam
  // is available behind this switch and reuses `momentum` as beta1.
  enum class Optimizer { SgdMomentum, Adam } optimizer = Optimizer::SgdMomentum;
  double momentum = 0.5;
  double learning_rate = 2e-4;
  double lambda_l1 = 100.0;
  int resolution = 256;
  int gen_channels = 64;
  int disc_channels = 64;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  flow::FlowConfig flow;
};

void validate(const TrainConfig& cfg);
std::uint64_t config_hash(const TrainConfig& cfg);

struct TrainingPair {
  Tensor x;  // conditioning image, model range
  Tensor y;  // target image, model range
};

// Deterministic source of training pairs: consecutive-frame pairs of the
// train split with flow estimated once per pair, a frozen percentile range
// mapping, and a seeded per-epoch shuffle.
class PairStream {
 public:
  PairStream(const data::DatasetSplit& split, const TrainConfig& cfg,
             const std::filesystem::path& flow_cache_dir = {});

  std::size_t size() const { return pair_video_.size(); }
  const flow::FlowMapping& mapping() const { return mapping_; }
  std::vector<std::size_t> epoch_order(int epoch) const;
  TrainingPair get(std::size_t index) const;

 private:
  TrainConfig cfg_;
  flow::FlowMapping mapping_;
  std::vector<Tensor> frames_;                  // resized, model range
  std::vector<flow::FlowField> flows_;          // resized to cfg.resolution
  std::vector<std::size_t> pair_video_;         // bookkeeping only
  std::vector<std::pair<std::size_t, std::size_t>> pair_frames_;  // (xt, xt1)
};

struct StepMetrics {
  double loss_d = 0;
  double loss_g_adv = 0;
  double loss_l1 = 0;
};

struct OptState {
  std::vector<double> m1;  // momentum / first moment
  std::vector<double> m2;  // adam second moment
  std::uint64_t t = 0;
};

// Everything needed to continue training or to run detection later.
struct TrainerState {
  TrainConfig cfg;
  nn::GeneratorState gen;
  nn::DiscriminatorState disc;
  OptState gen_opt;
  OptState disc_opt;
  flow::FlowMapping mapping;
  int epoch = 0;  // completed epochs
  std::uint64_t global_step = 0;
  StepMetrics last;
};

TrainerState make_trainer_state(const TrainConfig& cfg,
                                const flow::FlowMapping& mapping);

// One discriminator update followed by one generator update on a batch of
// pairs (gradients averaged over the batch).
StepMetrics train_step(TrainerState& ts,
                       const std::vector<const TrainingPair*>& batch);
StepMetrics train_step(TrainerState& ts, const TrainingPair& pair);

using EpochCallback = std::function<void(const TrainerState&)>;

// Full training run. When out_dir is nonempty, per-epoch checkpoints and a
// metrics CSV (epoch, step, loss_D, loss_G_adv, loss_L1) are written there.
// Pass resume to continue from a stored checkpoint.
TrainerState train_network(const data::DatasetSplit& split,
                           const TrainConfig& cfg,
                           const std::filesystem::path& out_dir = {},
                           const std::filesystem::path& flow_cache_dir = {},
                           const TrainerState* resume = nullptr,
                           const EpochCallback& on_epoch = {});

void save_checkpoint(const TrainerState& ts, const std::filesystem::path& path);
TrainerState load_checkpoint(const std::filesystem::path& path);

std::string checkpoint_filename(nn::Direction dir, int epoch);

}  // namespace ganom::train
