#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scpo/consistency.hpp"
#include "scpo/types.hpp"

namespace scpo {

/// Filtering threshold, either a fraction of k ("0.5k") or a vote count ("2").
class Threshold {
 public:
  enum class Form { FractionOfK, Absolute };

  static Threshold fraction(double f);
  static Threshold absolute(double votes);
  /// Parses "0.5k" / "2". Throws ValidationError.
  static Threshold parse(std::string_view text);

  Form form() const { return form_; }
  double value() const { return value_; }
  /// Vote count a chosen answer must reach for this k.
  double resolve(int k) const;
  std::string to_string() const;

  bool operator==(const Threshold&) const = default;

 private:
  Threshold(Form form, double value) : form_(form), value_(value) {}
  Form form_ = Form::FractionOfK;
  double value_ = 0.5;
};

/// Per-iteration thresholds; iterations past the end reuse the last entry.
struct ThresholdSchedule {
  std::vector<Threshold> values;

  const Threshold& at(int iteration) const;
  bool operator==(const ThresholdSchedule&) const = default;
};

enum class PairSource { Consistency, Gold, Rm, Lmsi };
std::string_view to_string(PairSource s);
PairSource pair_source_from_string(std::string_view s);

struct PreferencePair {
  std::string problem_id;
  std::string chosen_text;
  std::string rejected_text;
  std::string chosen_answer;
  std::string rejected_answer;
  int chosen_votes = 0;
  int rejected_votes = 0;
  int k = 0;
  double weight = 0.0;
  PairSource source = PairSource::Consistency;
  double tau = 0.0;  // resolved vote threshold used at construction
  int iteration = 0;

  bool operator==(const PreferencePair&) const = default;
};

bool filter_query(const VoteTally& tally, double tau_votes);

enum class PairStatus { Emitted, BelowThreshold, NoRejected, Tied };

/// Result of the consistency rule before the zero-weight drop. `pair` is set
/// for Emitted and Tied so analyses can count ties.
struct PairCandidate {
  PairStatus status = PairStatus::BelowThreshold;
  std::optional<PreferencePair> pair;
};

PairCandidate consider_pair(const VoteTally& base, const VoteTally* high_temp,
                            const Threshold& tau, std::uint64_t seed);

std::optional<PreferencePair> build_pair(const VoteTally& base,
                                         const VoteTally* high_temp,
                                         const Threshold& tau,
                                         std::uint64_t seed);

/// Correct-vs-incorrect pair with weight 1; samples carry extracted answers.
std::optional<PreferencePair> build_gold_pair(std::span<const ResponseSample> base,
                                              const std::string& gold,
                                              std::uint64_t seed);

/// Max/min reward pair. Throws DegeneratePool when fewer than two distinct
/// extracted answers exist.
PreferencePair build_rm_pair(std::span<const ResponseSample> samples,
                             std::span<const double> rm_scores);

/// Most-consistent response as a supervised target (no rejected side).
std::optional<PreferencePair> build_lmsi_target(const VoteTally& base,
                                                const Threshold& tau);

enum class PairMode { Unsupervised, SemiSupervised, Gold, Rm, LmsiTargets };
std::string_view to_string(PairMode m);
PairMode pair_mode_from_string(std::string_view s);

struct ProblemEvidence {
  std::vector<ResponseSample> base;
  std::vector<ResponseSample> high_temp;
  VoteTally base_tally;
  std::optional<VoteTally> high_tally;
};

using RewardScorer =
    std::function<std::vector<double>(const Problem&, std::span<const ResponseSample>)>;

struct AssembleOptions {
  PairMode mode = PairMode::Unsupervised;
  bool transduction = false;
  int iteration = 0;
  std::uint64_t seed = 0;
  RewardScorer reward;  // required for PairMode::Rm
};

/// Which problems feed the training pool: train split always, test split
/// only under transduction, dev never.
bool participates(const Problem& p, bool transduction);
/// Gold is visible to pair construction only for train-split seed problems.
bool usable_gold(const Problem& p);

/// Builds the sorted pair set for one iteration. Throws EmptyDataset.
/// Consistency ties dropped for zero weight are appended to `ties` if given.
std::vector<PreferencePair> assemble_iteration_pairs(
    std::span<const Problem> problems,
    const std::map<std::string, ProblemEvidence>& evidence,
    const ThresholdSchedule& schedule, const AssembleOptions& options,
    std::vector<PreferencePair>* ties = nullptr);

}  // namespace scpo
