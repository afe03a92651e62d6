#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scpo/backend.hpp"
#include "scpo/config.hpp"
#include "scpo/io.hpp"
#include "scpo/metrics.hpp"
#include "scpo/pairs.hpp"
#include "scpo/synthetic.hpp"
#include "scpo/trainer.hpp"

namespace scpo {

// Stage seeds. Every stage draws from derive_seed(cfg.seed, <stage>, t).
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage, int iteration);

/// Copies of `problems` as seen by pair construction: gold answers of
/// anything but train-split seed problems are removed.
std::vector<Problem> training_view(std::span<const Problem> problems);

/// Problems that feed pair construction at this setting.
std::vector<Problem> participating(std::span<const Problem> problems, bool transduction);

/// Base pool for every problem, plus the high-temperature pool for problems
/// whose base samples all agree.
std::vector<ResponseSample> sample_stage(SamplingBackend& backend,
                                         std::span<const Problem> problems,
                                         const RunConfig& cfg, int iteration);

std::map<std::string, ProblemEvidence> evidence_from_samples(
    std::span<const ResponseSample> samples, const RunConfig& cfg, int iteration);

std::vector<VoteTally> base_tallies(const std::map<std::string, ProblemEvidence>& evidence);

/// Few-shot generation followed by the answerability filter
/// (top votes >= gen_filter_tau under the current model).
struct GeneratedQueries {
  std::vector<Problem> drawn;
  std::vector<Problem> kept;
};
GeneratedQueries generate_stage(SamplingBackend& backend, std::span<const Problem> seed_problems,
                                const RunConfig& cfg, int iteration);

struct PairStage {
  std::vector<PreferencePair> pairs;
  std::vector<PreferencePair> ties;
};
/// `truths` feeds the synthetic reward model in rm mode.
PairStage pair_stage(std::span<const Problem> problems,
                     const std::map<std::string, ProblemEvidence>& evidence,
                     const RunConfig& cfg, int iteration,
                     const std::map<std::string, std::string>& truths);

PolicyModel train_stage(const PolicyModel& model, std::span<const PreferencePair> pairs,
                        const RunConfig& cfg, int iteration,
                        std::span<const Problem> dev_problems, TrainLog* log);

/// Greedy and SC accuracy, vote share and Somers' D of `model` on the
/// configured evaluation split.
EvalReport evaluate_synthetic(SyntheticTask& task, const PolicyModel& model,
                              const RunConfig& cfg, int iteration);

struct IterationReport {
  int iteration = 0;  // index of the model that produced the samples
  double tau_votes = 0.0;
  int seed_pairs = 0;
  int generated_pairs = 0;
  int ties = 0;
  int generated_drawn = 0;
  int generated_kept = 0;
  double train_top_vote_share = 0.0;
  std::optional<PairQuality> quality;
  TrainLog log;
  EvalReport before;
  EvalReport after;
};

struct PipelineResult {
  std::vector<EvalReport> evals;  // M_0 .. M_T
  std::vector<IterationReport> iterations;
  PolicyModel final_model;
};

ojson to_json(const IterationReport& r, const RunConfig& cfg, int model_version);

/// Full T-iteration loop on the synthetic backend. With `out_dir`, writes
/// problems.jsonl, model_0.json and iteration_<t+1>/{samples,tallies,
/// generated,pairs}.jsonl, model.json, report.json, then summary.json.
PipelineResult run_pipeline(const RunConfig& cfg,
                            const std::optional<std::string>& out_dir = std::nullopt);

struct TauSweepRow {
  Threshold tau = Threshold::fraction(0.5);
  int pair_count = 0;
  double margin = 0.0;
  double test_acc = 0.0;  // greedy accuracy of the final model
};

/// One pipeline per threshold with the schedule pinned to that value.
std::vector<TauSweepRow> sweep_tau(const RunConfig& cfg, std::span<const Threshold> taus);
std::string tau_sweep_csv(std::span<const TauSweepRow> rows);

struct SomersRow {
  int k = 0;
  std::optional<double> d;
  int observations = 0;
};

/// Somers' D between V and correctness of the most and least consistent
/// answers of the seed model on the evaluation split, for each k.
std::vector<SomersRow> somers_table(const RunConfig& cfg, std::span<const int> ks);

ArtifactHeader make_header(const RunConfig& cfg, std::string kind, int iteration,
                           std::string model);

}  // namespace scpo
