#include "scpo/backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

void SamplingSpec::validate() const {
  if (n <= 0) throw ValidationError("n must be positive");
  if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must be in (0,1]");
  if (max_tokens <= 0) throw ValidationError("max_tokens must be positive");
}

std::vector<std::vector<ResponseSample>> SamplingBackend::sample_batch(
    std::span<const Problem> problems, const SamplingSpec& spec, Pool pool) {
  std::vector<std::vector<ResponseSample>> out;
  out.reserve(problems.size());
  for (const auto& p : problems) out.push_back(sample_responses(p, spec, pool));
  return out;
}

Eigen::VectorXd sampling_distribution(const Eigen::VectorXd& logits, double temperature,
                                      double top_p) {
  Eigen::VectorXd p = softmax((logits / temperature).eval());
  if (top_p >= 1.0) return p;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p(a) > p(b); });
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(p.size());
  double mass = 0.0;
  for (auto i : idx) {
    kept(i) = p(i);
    mass += p(i);
    if (mass >= top_p) break;
  }
  return kept / kept.sum();
}

std::string SyntheticBackend::render_response(std::string_view answer) {
  return "rationale stub\n#### " + std::string(answer);
}

std::vector<ResponseSample> SyntheticBackend::sample_responses(const Problem& problem,
                                                               const SamplingSpec& spec,
                                                               Pool pool) {
  spec.validate();
  const auto row = model_.row_of(problem.id);
  const Eigen::VectorXd p = sampling_distribution(
      model_.logits(row), spec.temperature, task_.spec().answer_level_top_p ? spec.top_p : 1.0);
  std::discrete_distribution<int> draw(p.data(), p.data() + p.size());
  Rng rng(derive_seed(spec.seed, "sample", static_cast<std::uint64_t>(pool), problem.id));

  std::vector<ResponseSample> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    ResponseSample s;
    s.problem_id = problem.id;
    s.sample_idx = i;
    s.temperature = spec.temperature;
    s.pool = pool;
    s.text = render_response(model_.domain(row)[static_cast<std::size_t>(draw(rng))]);
    s.answer = extract_answer(s.text, extractor_);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Problem> SyntheticBackend::generate_queries(std::span<const Problem> seed_problems,
                                                        int n_shots, int count,
                                                        const SamplingSpec& /*spec*/,
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
    std::string n = std::to_string(i);
    if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
    const std::string id = id_prefix + "-" + n;
    Problem p = task_.generate(id, model_);
    if (!seen.insert(p.text).second) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<std::string> SyntheticBackend::greedy_answer(const Problem& problem) {
  return scpo::greedy_answer(model_, model_.row_of(problem.id));
}

std::string SyntheticBackend::model_id() const {
  return "synthetic-policy-v" + std::to_string(model_.version());
}

}  // namespace scpo
