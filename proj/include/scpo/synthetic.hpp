#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scpo/policy.hpp"
#include "scpo/types.hpp"

namespace scpo {

/// Desk-scale stand-in for a seed language model on a numeric-answer task.
///
/// Each problem has `answer_domain` integer answers: the true one plus
/// near misses within +-answer_span. The seed policy puts `skill` mass on the
/// true answer and spreads the rest over distractors with log-normal jitter
/// of scale `noise_spread`. Two mixtures make the task non-trivial:
///  - prefix traps: distractors carry a sign slip ("-47"), so their shared
///    '-' prefix can out-weigh the true answer under greedy decoding even
///    though the true answer is the mode;
///  - contested problems: a "misconception" distractor receives
///    contested_true_mass + contested_gap, just above the true answer.
/// Answers also carry feature vectors (true answers lean along axis 0,
/// misconceptions along axis 1) so a shared linear head can generalise.
struct SyntheticTaskSpec {
  int n_problems = 200;  // train split
  int n_dev = 0;
  int n_test = 200;
  int answer_domain = 10;
  double skill = 0.45;
  double noise_spread = 0.5;
  std::uint64_t rng_seed = 0;

  double prefix_trap_fraction = 0.3;
  double contested_fraction = 0.0;
  double contested_true_mass = -1.0;  // < 0 means `skill`
  double contested_gap = 0.05;

  int feature_dim = 4;
  double feature_signal = 1.5;
  double misconception_signal = 3.0;
  double feature_noise = 0.5;
  int answer_span = 20;
  // top_p acts on tokens in a language model; truncating whole answers
  // instead deletes the distractor tail outright, so it is opt-in here.
  bool answer_level_top_p = false;

  void validate() const;
  bool operator==(const SyntheticTaskSpec&) const = default;
};

struct SyntheticDraw {
  Problem problem;
  std::vector<std::string> domain;
  Eigen::VectorXd logits;
  Eigen::MatrixXd features;
  std::string truth;
  bool contested = false;
  bool trap = false;
};

/// Draws one problem from the task distribution; deterministic in
/// (spec.rng_seed, id).
SyntheticDraw draw_synthetic_problem(const SyntheticTaskSpec& spec, const std::string& id,
                                     Split split, Origin origin);

class SyntheticTask {
 public:
  explicit SyntheticTask(SyntheticTaskSpec spec);

  const SyntheticTaskSpec& spec() const { return spec_; }
  const std::vector<Problem>& problems() const { return problems_; }

  /// M_0 over every seed problem.
  PolicyModel initial_model() const;

  /// Hidden ground truth, including generated problems (never exposed
  /// through Problem::gold_answer for those).
  const std::string& truth(const std::string& problem_id) const;
  bool knows(const std::string& problem_id) const { return truths_.count(problem_id) != 0; }
  const std::map<std::string, std::string>& truths() const { return truths_; }

  /// Draws a fresh generated problem, registers its truth and appends its
  /// row to `model`.
  Problem generate(const std::string& id, PolicyModel& model);

  /// Rebuilds a generated problem's row after reloading a model from disk.
  void register_truth(const std::string& id, const std::string& truth) { truths_[id] = truth; }

 private:
  SyntheticTaskSpec spec_;
  std::vector<Problem> problems_;
  std::map<std::string, std::string> truths_;
};

/// RM stand-in: score = 1{answer correct} + N(0, sigma^2), deterministic in
/// (seed, problem, pool, sample_idx).
class NoisyRewardModel {
 public:
  NoisyRewardModel(std::map<std::string, std::string> truths, double sigma, std::uint64_t seed)
      : truths_(std::move(truths)), sigma_(sigma), seed_(seed) {}

  double score(const ResponseSample& s) const;
  std::vector<double> score_all(std::span<const ResponseSample> samples) const;

 private:
  std::map<std::string, std::string> truths_;
  double sigma_;
  std::uint64_t seed_;
};

}  // namespace scpo
