#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scpo/types.hpp"

namespace scpo {

enum class ExtractorKind { HashNumber, Boxed, LastLine, JsonSolution };

std::string_view to_string(ExtractorKind kind);
/// Accepts "hash-number", "boxed", "last-line", "json-solution".
ExtractorKind extractor_from_string(std::string_view name);

/// Normal form used for answer equality. Throws MalformedAnswer.
std::string canonicalize(std::string_view raw, ExtractorKind kind);

/// Canonical answer at the last matching site, or nullopt. Never throws.
std::optional<std::string> extract_answer(std::string_view text,
                                          ExtractorKind kind) noexcept;

struct AnswerCluster {
  std::string answer;
  int votes = 0;
  int representative = 0;  // sample_idx
  std::string representative_text;
  int first_position = 0;  // position in the tallied list

  bool operator==(const AnswerCluster&) const = default;
};

/// V(y) per answer for one problem and one pool. Clusters are ordered by
/// votes descending, then first occurrence.
struct VoteTally {
  std::string problem_id;
  int k = 0;
  std::vector<AnswerCluster> clusters;
  int unparsed_count = 0;

  const AnswerCluster* find(std::string_view answer) const;
  int votes_for(std::string_view answer) const;
  int top_votes() const { return clusters.empty() ? 0 : clusters.front().votes; }
  double top_vote_share() const {
    return k > 0 ? static_cast<double>(top_votes()) / k : 0.0;
  }

  bool operator==(const VoteTally&) const = default;
};

/// Re-extracts answers from the sample texts with `kind`. Representatives
/// are drawn uniformly within each cluster from a stream keyed on
/// (seed, problem_id). Throws MixedProblem / std::invalid_argument.
VoteTally tally_votes(std::span<const ResponseSample> samples,
                      ExtractorKind kind, std::uint64_t seed);

}  // namespace scpo
