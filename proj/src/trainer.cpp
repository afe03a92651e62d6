#include "scpo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

std::string_view to_string(Schedule s) {
  return s == Schedule::Cosine ? "cosine" : "constant";
}

Schedule schedule_from_string(std::string_view s) {
  if (s == "constant") return Schedule::Constant;
  if (s == "cosine") return Schedule::Cosine;
  throw ValidationError("schedule: expected constant|cosine, got '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("epochs must be >= 0");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("lr must be positive");
  }
}

double scheduled_rate(const TrainConfig& cfg, long step, long total_steps) {
  if (cfg.schedule == Schedule::Constant || total_steps <= 0) return cfg.learning_rate;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

PolicyModel train_iteration(const PolicyModel& model, std::span<const PreferencePair> pairs,
                            const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                            std::uint64_t iteration_seed, const CheckpointScorer& scorer,
                            TrainLog* log) {
  train_cfg.validate();
  if (pairs.empty()) throw EmptyDataset("train_iteration: no pairs");
  const PolicyModel reference = model;
  PolicyModel current = model;

  TrainLog local;
  TrainLog& out_log = log ? *log : local;
  out_log = TrainLog{};

  PolicyModel best = current;
  double best_score = 0.0;
  bool have_best = false;

  const auto n = static_cast<long>(pairs.size());
  const long batches = (n + train_cfg.batch_size - 1) / train_cfg.batch_size;
  const long total_steps = batches * train_cfg.epochs;
  long step = 0;

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<RowLoss<double>> batch_losses;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    Rng rng(derive_seed(iteration_seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (long b = 0; b < batches; ++b) {
      const long lo = b * train_cfg.batch_size;
      const long hi = std::min(n, lo + train_cfg.batch_size);
      batch_losses.clear();
      for (long i = lo; i < hi; ++i) {
        batch_losses.push_back(
            pair_loss(current, reference, pairs[order[static_cast<std::size_t>(i)]], loss_cfg));
        const auto& l = batch_losses.back();
        if (!std::isfinite(l.value) || !l.grad.allFinite()) {
          throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch + 1));
        }
        loss_sum += l.value;
      }
      const double step_size = scheduled_rate(train_cfg, step, total_steps) /
                               static_cast<double>(hi - lo);
      for (const auto& l : batch_losses) current.apply_row_gradient(l.row, l.grad, step_size);
      ++step;
    }
    out_log.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    if (!current.all_finite()) throw NonFiniteLoss("parameters diverged at epoch " + std::to_string(epoch + 1));
    if (scorer) {
      const double s = scorer(current);
      out_log.dev_accuracy.push_back(s);
      if (!have_best || s > best_score) {
        best = current;
        best_score = s;
        have_best = true;
        out_log.selected_epoch = epoch + 1;
      }
    }
  }

  PolicyModel result = (scorer && have_best) ? std::move(best) : std::move(current);
  if (!scorer) out_log.selected_epoch = train_cfg.epochs;
  result.set_version(model.version() + 1);
  return result;
}

}  // namespace scpo
