#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scpo/consistency.hpp"
#include "scpo/metrics.hpp"
#include "scpo/pairs.hpp"
#include "scpo/policy.hpp"
#include "scpo/types.hpp"

namespace scpo {

using ojson = nlohmann::ordered_json;

/// First line of every artifact written by the pipeline:
/// {"header": {"kind", "config_hash", "iteration", "seed", "model"}}.
struct ArtifactHeader {
  std::string kind;
  std::string config_hash;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string model;

  bool operator==(const ArtifactHeader&) const = default;
};

ojson to_json(const Problem& p);
ojson to_json(const ResponseSample& s);
ojson to_json(const PreferencePair& p);
ojson to_json(const ArtifactHeader& h);
ojson to_json(const VoteTally& t);
ojson to_json(const EvalReport& r);

/// Strict decoders: every key required, no extra keys. `line` is used in
/// SchemaError messages.
Problem problem_from_json(const nlohmann::json& j, int line);
ResponseSample sample_from_json(const nlohmann::json& j, int line);
PreferencePair pair_from_json(const nlohmann::json& j, int line);

template <typename T>
struct Dataset {
  std::optional<ArtifactHeader> header;
  std::vector<T> records;
};

/// Written via a temporary file and rename, so a failed write never
/// clobbers an earlier artifact.
void write_text_atomic(const std::string& path, const std::string& contents);
std::string read_text(const std::string& path);

std::string encode_jsonl(std::span<const ojson> records, const std::optional<ArtifactHeader>& h);

void write_problems(const std::string& path, std::span<const Problem> v,
                    const std::optional<ArtifactHeader>& h = std::nullopt);
void write_samples(const std::string& path, std::span<const ResponseSample> v,
                   const std::optional<ArtifactHeader>& h = std::nullopt);
void write_pairs(const std::string& path, std::span<const PreferencePair> v,
                 const std::optional<ArtifactHeader>& h = std::nullopt);
void write_tallies(const std::string& path, std::span<const VoteTally> v,
                   const std::optional<ArtifactHeader>& h = std::nullopt);

Dataset<Problem> read_problems(const std::string& path);
Dataset<ResponseSample> read_samples(const std::string& path);
Dataset<PreferencePair> read_pairs(const std::string& path);

/// Generic DPO-trainer rows: {prompt, chosen, rejected, weight}.
ojson to_dpo_json(const PreferencePair& p, const std::string& prompt);
void write_dpo(const std::string& path, std::span<const PreferencePair> pairs,
               const std::map<std::string, std::string>& prompts);

ojson model_to_json(const PolicyModel& m);
PolicyModel model_from_json(const nlohmann::json& j);
void write_model(const std::string& path, const PolicyModel& m);
PolicyModel read_model(const std::string& path);

void write_json(const std::string& path, const ojson& doc);

}  // namespace scpo
