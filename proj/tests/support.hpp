#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scpo/backend.hpp"
#include "scpo/consistency.hpp"
#include "scpo/pairs.hpp"
#include "scpo/types.hpp"

namespace scpo::testing {

// Base-pool samples whose texts carry the given answers; "" means a
// response with no answer marker.
inline std::vector<ResponseSample> samples_with(const std::string& id,
                                                const std::vector<std::string>& answers,
                                                Pool pool = Pool::Base) {
  std::vector<ResponseSample> out;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    ResponseSample s;
    s.problem_id = id;
    s.sample_idx = static_cast<int>(i);
    s.pool = pool;
    s.temperature = pool == Pool::Base ? 0.7 : 1.2;
    if (answers[i].empty()) {
      s.text = "rationale stub without a final line";
    } else {
      s.text = SyntheticBackend::render_response(answers[i]);
      s.answer = answers[i];
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline VoteTally tally_of(const std::string& id, const std::vector<std::string>& answers,
                          std::uint64_t seed = 7) {
  return tally_votes(samples_with(id, answers), ExtractorKind::HashNumber, seed);
}

inline ProblemEvidence evidence_of(const std::string& id, const std::vector<std::string>& base,
                                   const std::vector<std::string>& high = {}) {
  ProblemEvidence ev;
  ev.base = samples_with(id, base);
  ev.base_tally = tally_votes(ev.base, ExtractorKind::HashNumber, 7);
  if (!high.empty()) {
    ev.high_temp = samples_with(id, high, Pool::HighTemp);
    ev.high_tally = tally_votes(ev.high_temp, ExtractorKind::HashNumber, 7);
  }
  return ev;
}

inline Problem problem(const std::string& id, std::optional<std::string> gold = std::nullopt,
                       Split split = Split::Train, Origin origin = Origin::Seed) {
  return Problem{id, "text of " + id, std::move(gold), split, origin};
}

// Random answer list of length k over a small alphabet, with some unparsed.
inline std::vector<std::string> random_answers(std::mt19937_64& rng, int k, int alphabet,
                                               double unparsed_rate) {
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  std::bernoulli_distribution miss(unparsed_rate);
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back(miss(rng) ? "" : std::to_string(pick(rng) + 1));
  return out;
}

}  // namespace scpo::testing
