#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "scpo/backend.hpp"
#include "scpo/consistency.hpp"
#include "scpo/http_backend.hpp"
#include "scpo/loss.hpp"
#include "scpo/pairs.hpp"
#include "scpo/synthetic.hpp"
#include "scpo/trainer.hpp"

namespace scpo {

enum class BackendKind { Synthetic, Http };
std::string_view to_string(BackendKind b);
BackendKind backend_from_string(std::string_view s);

/// Every tunable of a run. Defaults:
/// k=8, temperature 0.7, top_p 0.9, 1.2 for the rejected pool,
/// beta 0.5, alpha 1, 10 epochs, batch 16, T=2, tau 0.5k then 0.7k.
struct RunConfig {
  int k = 8;
  double temperature = 0.7;
  double top_p = 0.9;
  double high_temperature = 1.2;
  int high_temp_samples = 8;
  int max_tokens = 1024;
  ThresholdSchedule tau{{Threshold::fraction(0.5), Threshold::fraction(0.7)}};

  LossConfig loss;
  TrainConfig train;
  bool select_on_dev = false;

  std::uint64_t seed = 0;
  ExtractorKind extractor = ExtractorKind::HashNumber;
  PairMode mode = PairMode::Unsupervised;
  bool transduction = false;

  int gen_queries = 0;  // new problems per iteration
  int n_shots = 4;
  Threshold gen_filter_tau = Threshold::fraction(0.5);

  double rm_sigma = 0.5;
  Split eval_split = Split::Test;

  BackendKind backend = BackendKind::Synthetic;
  HttpBackendConfig http;
  SyntheticTaskSpec synthetic;

  void validate() const;
  SamplingSpec base_spec(std::uint64_t seed_value) const;
  SamplingSpec high_temp_spec(std::uint64_t seed_value) const;

  bool operator==(const RunConfig&) const = default;
};

/// Empty or missing file contents give the defaults. Throws ParseError with
/// line/column for malformed YAML and ValidationError naming the key for
/// bad values or unknown keys.
RunConfig load_config(const std::string& path);
RunConfig parse_config(std::string_view yaml_text);

/// Same, with "key=value" overrides applied on top of the file. Nested keys
/// use dots ("synthetic.skill=0.6"); values are YAML scalars or flow lists.
RunConfig parse_config(std::string_view yaml_text, std::span<const std::string> overrides);
RunConfig load_config(const std::string& path, std::span<const std::string> overrides);

/// Canonical JSON echo (fixed key order) and its FNV-1a hash in hex.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace scpo
