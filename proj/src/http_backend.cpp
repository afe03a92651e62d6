#include "scpo/http_backend.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <json.hpp>
#include <random>
#include <set>
#include <thread>

#include "scpo/error.hpp"
#include "scpo/prompts.hpp"
#include "scpo/rng.hpp"

namespace scpo {

using nlohmann::json;

void HttpBackendConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0) {
    throw ValidationError("http.base_url: must start with http:// or https://");
  }
  if (model.empty()) throw ValidationError("http.model: must be non-empty");
  if (concurrency <= 0) throw ValidationError("concurrency: must be positive");
  if (max_attempts <= 0) throw ValidationError("http.max_attempts: must be positive");
  if (backoff_ms < 0) throw ValidationError("http.backoff_ms: must be >= 0");
  if (timeout_s <= 0) throw ValidationError("http.timeout_s: must be positive");
  prompt_template(response_template);
  prompt_template(query_template);
}

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.base_url.find("://") + 3;
  const auto slash = cfg_.base_url.find('/', scheme_end);
  host_ = cfg_.base_url.substr(0, slash);
  path_ = slash == std::string::npos ? "" : cfg_.base_url.substr(slash);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
  served_model_ = cfg_.model;
}

std::string HttpBackend::model_id() const {
  std::lock_guard lock(mu_);
  return served_model_;
}

namespace {

std::int64_t wire_seed(std::uint64_t s) { return static_cast<std::int64_t>(s & 0x7fffffffULL); }

}  // namespace

std::vector<HttpBackend::Completion> HttpBackend::complete(const std::string& prompt,
                                                           const SamplingSpec& spec) {
  httplib::Client client(host_);
  client.set_connection_timeout(std::chrono::seconds(cfg_.timeout_s));
  client.set_read_timeout(std::chrono::seconds(cfg_.timeout_s));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  std::vector<Completion> out;
  std::uint64_t round = 0;
  while (static_cast<int>(out.size()) < spec.n) {
    const int want = spec.n - static_cast<int>(out.size());
    json body = {
        {"model", cfg_.model},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", spec.temperature},
        {"top_p", spec.top_p},
        {"n", want},
        {"max_tokens", spec.max_tokens},
        {"seed", wire_seed(round == 0 ? spec.seed : splitmix64(spec.seed + round))},
    };
    const std::string payload = body.dump();

    std::string last_error;
    std::optional<json> reply;
    int delay = cfg_.backoff_ms;
    for (int attempt = 0; attempt < cfg_.max_attempts && !reply; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        delay *= 2;
      }
      auto res = client.Post(path_ + "/chat/completions", headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from " + host_ +
                                 ": " + res->body.substr(0, 200));
      }
      try {
        reply = json::parse(res->body);
      } catch (const json::exception& e) {
        last_error = std::string("malformed response body: ") + e.what();
      }
    }
    if (!reply) {
      throw BackendUnavailable(last_error + " after " + std::to_string(cfg_.max_attempts) +
                               " attempts");
    }

    try {
      if (reply->contains("model") && (*reply)["model"].is_string()) {
        std::lock_guard lock(mu_);
        served_model_ = (*reply)["model"].get<std::string>();
      }
      auto choices = reply->at("choices");
      std::vector<std::pair<int, Completion>> got;
      int fallback = 0;
      for (const auto& c : choices) {
        Completion comp;
        const auto& content = c.at("message").at("content");
        comp.text = content.is_string() ? content.get<std::string>() : std::string();
        comp.truncated = c.value("finish_reason", json()).is_string() &&
                         c["finish_reason"].get<std::string>() == "length";
        got.emplace_back(c.value("index", fallback), std::move(comp));
        ++fallback;
      }
      std::stable_sort(got.begin(), got.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      if (got.empty()) throw BackendUnavailable("server returned no choices");
      for (auto& g : got) {
        if (static_cast<int>(out.size()) < spec.n) out.push_back(std::move(g.second));
      }
    } catch (const json::exception& e) {
      throw BackendUnavailable(std::string("unexpected response shape: ") + e.what());
    }
    ++round;
  }
  return out;
}

std::vector<ResponseSample> HttpBackend::sample_responses(const Problem& problem,
                                                          const SamplingSpec& spec, Pool pool) {
  spec.validate();
  SamplingSpec s = spec;
  s.seed = derive_seed(spec.seed, "sample", static_cast<std::uint64_t>(pool), problem.id);
  auto completions = complete(render_response_prompt(cfg_.response_template, problem), s);
  std::vector<ResponseSample> out;
  for (std::size_t i = 0; i < completions.size(); ++i) {
    ResponseSample r;
    r.problem_id = problem.id;
    r.sample_idx = static_cast<int>(i);
    r.temperature = spec.temperature;
    r.pool = pool;
    r.text = std::move(completions[i].text);
    r.truncated = completions[i].truncated;
    r.answer = extract_answer(r.text, cfg_.extractor);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<ResponseSample>> HttpBackend::sample_batch(
    std::span<const Problem> problems, const SamplingSpec& spec, Pool pool) {
  spec.validate();
  std::vector<std::vector<ResponseSample>> out(problems.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      {
        std::lock_guard lock(failure_mu);
        if (failure) return;
      }
      try {
        out[i] = sample_responses(problems[i], spec, pool);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.concurrency), problems.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Problem> HttpBackend::generate_queries(std::span<const Problem> seed_problems,
                                                   int n_shots, int count,
                                                   const SamplingSpec& spec,
                                                   const std::string& id_prefix) {
  if (count < 0) throw ValidationError("count must be >= 0");
  if (count == 0) return {};
  if (n_shots <= 0 || n_shots > static_cast<int>(seed_problems.size())) {
    throw ValidationError("n_shots must be in [1, number of seed problems]");
  }
  std::set<std::string> seen;
  for (const auto& p : seed_problems) seen.insert(p.text);

  std::vector<Problem> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(spec.seed, "exemplars", static_cast<std::uint64_t>(i)));
    std::vector<std::size_t> idx(seed_problems.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Problem> shots;
    for (int s = 0; s < n_shots; ++s) shots.push_back(seed_problems[idx[static_cast<std::size_t>(s)]]);

    SamplingSpec one = spec;
    one.n = 1;
    one.seed = derive_seed(spec.seed, "gen-query", static_cast<std::uint64_t>(i));
    auto c = complete(render_query_prompt(cfg_.query_template, shots), one);
    std::string text = parse_generated_query(c.front().text);
    if (text.empty() || !seen.insert(text).second) continue;

    std::string n = std::to_string(i);
    if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
    Problem p;
    p.id = id_prefix + "-" + n;
    p.text = std::move(text);
    p.split = Split::Train;
    p.origin = Origin::Generated;
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<std::string> HttpBackend::greedy_answer(const Problem& problem) {
  SamplingSpec greedy;
  greedy.n = 1;
  greedy.temperature = 0.0;  // complete() does not validate; servers treat 0 as argmax
  greedy.top_p = 1.0;
  auto c = complete(render_response_prompt(cfg_.response_template, problem), greedy);
  return extract_answer(c.front().text, cfg_.extractor);
}

}  // namespace scpo
