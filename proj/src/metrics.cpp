#include "scpo/metrics.hpp"

#include <algorithm>

#include "scpo/error.hpp"

namespace scpo {

namespace {

const std::string& gold_of(const Problem& p) {
  if (!p.gold_answer) throw MissingGold("problem '" + p.id + "' has no gold answer");
  return *p.gold_answer;
}

bool is_correct(const std::map<std::string, std::string>& gold, const std::string& problem_id,
                const std::string& answer) {
  auto it = gold.find(problem_id);
  if (it == gold.end()) throw MissingGold("problem '" + problem_id + "' has no gold answer");
  return answer == it->second;
}

}  // namespace

double greedy_accuracy(const PolicyModel& model, std::span<const Problem> problems) {
  if (problems.empty()) return 0.0;
  int hit = 0;
  for (const auto& p : problems) {
    const auto& gold = gold_of(p);
    if (greedy_answer(model, model.row_of(p.id)) == gold) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(problems.size());
}

double greedy_accuracy(std::span<const std::optional<std::string>> answers,
                       std::span<const Problem> problems) {
  if (answers.size() != problems.size()) {
    throw ValidationError("greedy_accuracy: one answer per problem required");
  }
  if (problems.empty()) return 0.0;
  int hit = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const auto& gold = gold_of(problems[i]);
    if (answers[i] && *answers[i] == gold) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(problems.size());
}

std::optional<std::string> sc_answer(std::span<const ResponseSample> samples) {
  struct Count {
    int votes = 0;
    int first_idx = 0;
  };
  std::map<std::string, Count> counts;
  for (const auto& s : samples) {
    if (!s.answer) continue;
    auto [it, fresh] = counts.try_emplace(*s.answer, Count{0, s.sample_idx});
    it->second.votes += 1;
    it->second.first_idx = std::min(it->second.first_idx, s.sample_idx);
  }
  const std::string* best = nullptr;
  Count bc;
  for (const auto& [a, c] : counts) {
    if (!best || c.votes > bc.votes || (c.votes == bc.votes && c.first_idx < bc.first_idx)) {
      best = &a;
      bc = c;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

double sc_accuracy(std::span<const Problem> problems,
                   const std::map<std::string, std::vector<ResponseSample>>& samples) {
  if (problems.empty()) return 0.0;
  int hit = 0;
  std::optional<std::size_t> k;
  for (const auto& p : problems) {
    const auto& gold = gold_of(p);
    auto it = samples.find(p.id);
    if (it == samples.end()) throw ValidationError("no samples for problem '" + p.id + "'");
    if (k && *k != it->second.size()) throw ValidationError("sc_accuracy: unequal k across problems");
    k = it->second.size();
    auto a = sc_answer(it->second);
    if (a && *a == gold) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(problems.size());
}

double mean_top_vote_share(std::span<const VoteTally> tallies) {
  if (tallies.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : tallies) sum += t.top_vote_share();
  return sum / static_cast<double>(tallies.size());
}

std::optional<double> somers_d(std::span<const std::pair<int, int>> obs) {
  if (obs.size() < 2) throw ValidationError("somers_d needs at least two observations");
  long long concordant = 0, discordant = 0, tied_acc = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      const int dv = obs[i].first - obs[j].first;
      if (dv == 0) continue;
      const int da = obs[i].second - obs[j].second;
      if (da == 0) {
        ++tied_acc;
      } else if ((dv > 0) == (da > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long denom = concordant + discordant + tied_acc;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(concordant - discordant) / static_cast<double>(denom);
}

std::vector<std::pair<int, int>> vote_accuracy_observations(
    std::span<const VoteTally> tallies, const std::map<std::string, std::string>& gold) {
  std::vector<std::pair<int, int>> out;
  for (const auto& t : tallies) {
    if (t.clusters.empty()) continue;
    const auto& top = t.clusters.front();
    out.emplace_back(top.votes, is_correct(gold, t.problem_id, top.answer) ? 1 : 0);
    if (t.clusters.size() > 1) {
      const auto& least = t.clusters.back();
      out.emplace_back(least.votes, is_correct(gold, t.problem_id, least.answer) ? 1 : 0);
    }
  }
  return out;
}

PairQuality pair_quality(std::span<const PreferencePair> pairs,
                         std::span<const PreferencePair> ties,
                         const std::map<std::string, std::string>& gold) {
  PairQuality q;
  auto classify = [&](const PreferencePair& p) {
    const bool c = is_correct(gold, p.problem_id, p.chosen_answer);
    const bool r = is_correct(gold, p.problem_id, p.rejected_answer);
    if (p.source == PairSource::Consistency && p.chosen_votes == p.rejected_votes) {
      ++q.ordering.tie;
    } else if (c && !r) {
      ++q.ordering.correct;
    } else if (!c && r) {
      ++q.ordering.incorrect;
    } else {
      ++q.ordering.neutral;
    }
    return std::pair{c, r};
  };
  double chosen_hits = 0.0, rejected_hits = 0.0;
  for (const auto& p : pairs) {
    auto [c, r] = classify(p);
    chosen_hits += c;
    rejected_hits += r;
  }
  for (const auto& p : ties) classify(p);
  q.pair_count = static_cast<int>(pairs.size());
  if (!pairs.empty()) {
    const auto n = static_cast<double>(pairs.size());
    q.margin = chosen_hits / n - rejected_hits / n;
  }
  return q;
}

}  // namespace scpo
