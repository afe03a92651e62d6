#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scpo/consistency.hpp"
#include "scpo/pairs.hpp"
#include "scpo/policy.hpp"
#include "scpo/types.hpp"

namespace scpo {

struct OrderingCounts {
  int correct = 0;
  int incorrect = 0;
  int tie = 0;
  int neutral = 0;

  int total() const { return correct + incorrect + tie + neutral; }
  bool operator==(const OrderingCounts&) const = default;
};

struct PairQuality {
  double margin = 0.0;  // acc(chosen) - acc(rejected) over emitted pairs
  int pair_count = 0;
  OrderingCounts ordering;

  double incorrect_rate() const {
    return ordering.total() ? static_cast<double>(ordering.incorrect) / ordering.total() : 0.0;
  }
};

struct EvalReport {
  double greedy_acc = 0.0;
  double sc_acc = 0.0;
  int sc_k = 0;
  double mean_top_vote_share = 0.0;
  std::optional<double> somers_d;  // absent when undefined
  std::optional<double> margin;
  OrderingCounts ordering;
  int n_problems = 0;
};

/// Fraction of problems whose greedy answer equals gold. Throws MissingGold.
double greedy_accuracy(const PolicyModel& model, std::span<const Problem> problems);

/// Same from precomputed greedy answers (HTTP temperature-0 runs), one per
/// problem.
double greedy_accuracy(std::span<const std::optional<std::string>> answers,
                       std::span<const Problem> problems);

/// Majority answer; ties go to the answer first produced at the lowest
/// sample_idx.
std::optional<std::string> sc_answer(std::span<const ResponseSample> samples);

/// Throws MissingGold, or ValidationError on unequal k.
double sc_accuracy(std::span<const Problem> problems,
                   const std::map<std::string, std::vector<ResponseSample>>& samples);

double mean_top_vote_share(std::span<const VoteTally> tallies);

/// Somers' D of acc given v: (C - D) / (C + D + T_acc) over all pairs not
/// tied on v. Returns nullopt when every v is equal. Throws ValidationError
/// for fewer than two observations.
std::optional<double> somers_d(std::span<const std::pair<int, int>> observations);

/// (V, Acc) of the most and least consistent answers of each tally; the
/// least consistent is skipped when only one cluster exists.
std::vector<std::pair<int, int>> vote_accuracy_observations(
    std::span<const VoteTally> tallies, const std::map<std::string, std::string>& gold);

/// Margin over `pairs`; ordering counts over `pairs` plus zero-weight
/// `ties`. Consistency pairs with equal votes classify as ties. Throws
/// MissingGold.
PairQuality pair_quality(std::span<const PreferencePair> pairs,
                         std::span<const PreferencePair> ties,
                         const std::map<std::string, std::string>& gold);

}  // namespace scpo
