#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "scpo/loss.hpp"
#include "scpo/pairs.hpp"
#include "scpo/policy.hpp"

namespace scpo {

enum class Schedule { Constant, Cosine };
std::string_view to_string(Schedule s);
Schedule schedule_from_string(std::string_view s);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.1;  // tabular policy; language models want ~5e-6 with cosine decay
  Schedule schedule = Schedule::Constant;
  int batch_size = 16;
  int iterations = 2;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // mean pair loss seen during each epoch
  std::vector<double> dev_accuracy;
  int selected_epoch = 0;  // 0 = input model, otherwise 1-based epoch
};

/// Scores a checkpoint (higher is better), e.g. dev greedy accuracy.
using CheckpointScorer = std::function<double(const PolicyModel&)>;

/// One ScPO iteration: the input is frozen as the reference, then
/// epochs x shuffled mini-batches of gradient descent (gradients averaged
/// over the batch). With a scorer, the best epoch wins with ties to the
/// earliest; otherwise the last epoch is returned. Version is incremented.
/// Throws EmptyDataset.
PolicyModel train_iteration(const PolicyModel& model, std::span<const PreferencePair> pairs,
                            const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                            std::uint64_t iteration_seed, const CheckpointScorer& scorer = {},
                            TrainLog* log = nullptr);

double scheduled_rate(const TrainConfig& cfg, long step, long total_steps);

}  // namespace scpo
