#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scpo/consistency.hpp"
#include "scpo/policy.hpp"
#include "scpo/synthetic.hpp"
#include "scpo/types.hpp"

namespace scpo {

struct SamplingSpec {
  int n = 8;
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 1024;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SamplingSpec&) const = default;
};

class SamplingBackend {
 public:
  virtual ~SamplingBackend() = default;

  /// Exactly spec.n samples with sample_idx 0..n-1 in request order.
  virtual std::vector<ResponseSample> sample_responses(const Problem& problem,
                                                       const SamplingSpec& spec, Pool pool) = 0;

  /// One entry per problem, same order. Backends may parallelise.
  virtual std::vector<std::vector<ResponseSample>> sample_batch(
      std::span<const Problem> problems, const SamplingSpec& spec, Pool pool);

  /// Few-shot query self-generation. Returned problems are origin=generated,
  /// carry no gold answer and get ids `<id_prefix>-NNNN`.
  virtual std::vector<Problem> generate_queries(std::span<const Problem> seed_problems,
                                                int n_shots, int count,
                                                const SamplingSpec& spec,
                                                const std::string& id_prefix) = 0;

  /// Deterministic single answer (argmax decoding / temperature 0).
  virtual std::optional<std::string> greedy_answer(const Problem& problem) = 0;

  virtual std::string model_id() const = 0;
};

/// Samples answers from a PolicyModel. Response text is
/// "rationale stub\n#### <answer>".
class SyntheticBackend final : public SamplingBackend {
 public:
  SyntheticBackend(SyntheticTask& task, PolicyModel& model,
                   ExtractorKind extractor = ExtractorKind::HashNumber)
      : task_(task), model_(model), extractor_(extractor) {}

  std::vector<ResponseSample> sample_responses(const Problem& problem, const SamplingSpec& spec,
                                               Pool pool) override;
  std::vector<Problem> generate_queries(std::span<const Problem> seed_problems, int n_shots,
                                        int count, const SamplingSpec& spec,
                                        const std::string& id_prefix) override;
  std::optional<std::string> greedy_answer(const Problem& problem) override;
  std::string model_id() const override;

  static std::string render_response(std::string_view answer);

 private:
  SyntheticTask& task_;
  PolicyModel& model_;
  ExtractorKind extractor_;
};

/// Temperature- and nucleus-adjusted answer distribution.
Eigen::VectorXd sampling_distribution(const Eigen::VectorXd& logits, double temperature,
                                      double top_p);

}  // namespace scpo
