#pragma once

#include <chrono>
#include <mutex>
#include <string>

#include "scpo/backend.hpp"

namespace scpo {

struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000/v1";  // ".../chat/completions" is appended
  std::string model = "default";
  std::string api_key_env = "OPENAI_API_KEY";
  int concurrency = 8;
  int max_attempts = 3;
  int backoff_ms = 500;  // doubled after each failed attempt
  int timeout_s = 300;
  std::string response_template = "gsm8k-response";
  std::string query_template = "math-query";
  ExtractorKind extractor = ExtractorKind::HashNumber;

  void validate() const;
  bool operator==(const HttpBackendConfig&) const = default;
};

/// OpenAI-compatible chat-completions client. Requests for different
/// problems run on up to `concurrency` worker threads; results are placed by
/// index so output layout never depends on completion order.
class HttpBackend final : public SamplingBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  std::vector<ResponseSample> sample_responses(const Problem& problem, const SamplingSpec& spec,
                                               Pool pool) override;
  std::vector<std::vector<ResponseSample>> sample_batch(std::span<const Problem> problems,
                                                        const SamplingSpec& spec,
                                                        Pool pool) override;
  std::vector<Problem> generate_queries(std::span<const Problem> seed_problems, int n_shots,
                                        int count, const SamplingSpec& spec,
                                        const std::string& id_prefix) override;
  std::optional<std::string> greedy_answer(const Problem& problem) override;

  /// Model name reported by the server, or the configured one before any call.
  std::string model_id() const override;

  struct Completion {
    std::string text;
    bool truncated = false;
  };
  /// One POST with retries; returns exactly `n` completions or throws
  /// BackendUnavailable. Re-requests when the server returns fewer than n.
  std::vector<Completion> complete(const std::string& prompt, const SamplingSpec& spec);

 private:
  HttpBackendConfig cfg_;
  std::string host_;  // scheme://host:port
  std::string path_;  // path prefix
  std::string api_key_;
  mutable std::mutex mu_;
  std::string served_model_;
};

}  // namespace scpo
