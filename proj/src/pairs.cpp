#include "scpo/pairs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

Threshold Threshold::fraction(double f) {
  if (!(f > 0.0 && f <= 1.0)) {
    throw ValidationError("tau fraction must be in (0,1], got " + std::to_string(f));
  }
  return Threshold(Form::FractionOfK, f);
}

Threshold Threshold::absolute(double votes) {
  if (!(votes > 0.0) || !std::isfinite(votes)) {
    throw ValidationError("tau must be positive, got " + std::to_string(votes));
  }
  return Threshold(Form::Absolute, votes);
}

Threshold Threshold::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  bool is_fraction = !text.empty() && (text.back() == 'k' || text.back() == 'K');
  if (is_fraction) text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("tau: cannot parse '" + std::string(text) + "'");
  }
  return is_fraction ? fraction(v) : absolute(v);
}

double Threshold::resolve(int k) const {
  return form_ == Form::FractionOfK ? value_ * k : value_;
}

std::string Threshold::to_string() const {
  std::ostringstream os;
  os << value_;
  if (form_ == Form::FractionOfK) os << 'k';
  return os.str();
}

const Threshold& ThresholdSchedule::at(int iteration) const {
  if (values.empty()) throw ValidationError("empty tau schedule");
  auto i = static_cast<std::size_t>(std::max(iteration, 0));
  return values[std::min(i, values.size() - 1)];
}

std::string_view to_string(PairSource s) {
  switch (s) {
    case PairSource::Consistency: return "consistency";
    case PairSource::Gold: return "gold";
    case PairSource::Rm: return "rm";
    case PairSource::Lmsi: return "lmsi";
  }
  return "consistency";
}

PairSource pair_source_from_string(std::string_view s) {
  if (s == "consistency") return PairSource::Consistency;
  if (s == "gold") return PairSource::Gold;
  if (s == "rm") return PairSource::Rm;
  if (s == "lmsi") return PairSource::Lmsi;
  throw ValidationError("unknown pair source '" + std::string(s) + "'");
}

std::string_view to_string(PairMode m) {
  switch (m) {
    case PairMode::Unsupervised: return "unsupervised";
    case PairMode::SemiSupervised: return "semi";
    case PairMode::Gold: return "gold";
    case PairMode::Rm: return "rm";
    case PairMode::LmsiTargets: return "lmsi-targets";
  }
  return "unsupervised";
}

PairMode pair_mode_from_string(std::string_view s) {
  if (s == "unsupervised") return PairMode::Unsupervised;
  if (s == "semi" || s == "semi_supervised") return PairMode::SemiSupervised;
  if (s == "gold") return PairMode::Gold;
  if (s == "rm" || s == "rm_baseline") return PairMode::Rm;
  if (s == "lmsi-targets" || s == "lmsi") return PairMode::LmsiTargets;
  throw ValidationError("unknown pair mode '" + std::string(s) + "'");
}

bool filter_query(const VoteTally& tally, double tau_votes) {
  return tally.top_votes() >= tau_votes;
}

namespace {

// Uniform choice among the clusters tied at the minimum vote count.
const AnswerCluster* pick_least(const std::vector<const AnswerCluster*>& pool,
                                Rng& rng) {
  if (pool.empty()) return nullptr;
  int least = pool.front()->votes;
  for (const auto* c : pool) least = std::min(least, c->votes);
  std::vector<const AnswerCluster*> tied;
  for (const auto* c : pool) {
    if (c->votes == least) tied.push_back(c);
  }
  std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
  return tied[pick(rng)];
}

}  // namespace

PairCandidate consider_pair(const VoteTally& base, const VoteTally* high_temp,
                            const Threshold& tau, std::uint64_t seed) {
  PairCandidate out;
  const double tau_votes = tau.resolve(base.k);
  if (base.clusters.empty() || !filter_query(base, tau_votes)) {
    out.status = PairStatus::BelowThreshold;
    return out;
  }
  Rng rng(derive_seed(seed, "rejected", 0, base.problem_id));
  const AnswerCluster& chosen = base.clusters.front();

  const AnswerCluster* rejected = nullptr;
  if (base.clusters.size() > 1) {
    std::vector<const AnswerCluster*> pool;
    for (std::size_t i = 1; i < base.clusters.size(); ++i) pool.push_back(&base.clusters[i]);
    rejected = pick_least(pool, rng);
  } else if (high_temp != nullptr) {
    std::vector<const AnswerCluster*> pool;
    for (const auto& c : high_temp->clusters) {
      if (c.answer != chosen.answer) pool.push_back(&c);
    }
    rejected = pick_least(pool, rng);
  }
  if (rejected == nullptr) {
    out.status = PairStatus::NoRejected;
    return out;
  }

  PreferencePair p;
  p.problem_id = base.problem_id;
  p.chosen_text = chosen.representative_text;
  p.rejected_text = rejected->representative_text;
  p.chosen_answer = chosen.answer;
  p.rejected_answer = rejected->answer;
  p.chosen_votes = chosen.votes;
  p.rejected_votes = base.votes_for(rejected->answer);
  p.k = base.k;
  p.weight = static_cast<double>(p.chosen_votes - p.rejected_votes) / base.k;
  p.source = PairSource::Consistency;
  p.tau = tau_votes;
  out.status = p.weight > 0.0 ? PairStatus::Emitted : PairStatus::Tied;
  out.pair = std::move(p);
  return out;
}

std::optional<PreferencePair> build_pair(const VoteTally& base,
                                         const VoteTally* high_temp,
                                         const Threshold& tau,
                                         std::uint64_t seed) {
  auto c = consider_pair(base, high_temp, tau, seed);
  if (c.status != PairStatus::Emitted) return std::nullopt;
  return c.pair;
}

namespace {

int count_answer(std::span<const ResponseSample> samples, const std::string& a) {
  return static_cast<int>(std::count_if(samples.begin(), samples.end(), [&](const auto& s) {
    return s.answer && *s.answer == a;
  }));
}

}  // namespace

std::optional<PreferencePair> build_gold_pair(std::span<const ResponseSample> base,
                                              const std::string& gold,
                                              std::uint64_t seed) {
  if (base.empty()) return std::nullopt;
  std::vector<const ResponseSample*> correct, incorrect;
  for (const auto& s : base) {
    if (!s.answer) continue;
    (*s.answer == gold ? correct : incorrect).push_back(&s);
  }
  if (correct.empty() || incorrect.empty()) return std::nullopt;

  Rng rng(derive_seed(seed, "gold", 0, base.front().problem_id));
  std::uniform_int_distribution<std::size_t> pc(0, correct.size() - 1);
  const auto* chosen = correct[pc(rng)];
  std::uniform_int_distribution<std::size_t> pr(0, incorrect.size() - 1);
  const auto* rejected = incorrect[pr(rng)];

  PreferencePair p;
  p.problem_id = chosen->problem_id;
  p.chosen_text = chosen->text;
  p.rejected_text = rejected->text;
  p.chosen_answer = *chosen->answer;
  p.rejected_answer = *rejected->answer;
  p.chosen_votes = count_answer(base, p.chosen_answer);
  p.rejected_votes = count_answer(base, p.rejected_answer);
  p.k = static_cast<int>(base.size());
  p.weight = 1.0;
  p.source = PairSource::Gold;
  return p;
}

PreferencePair build_rm_pair(std::span<const ResponseSample> samples,
                             std::span<const double> rm_scores) {
  if (samples.size() != rm_scores.size()) {
    throw std::invalid_argument("build_rm_pair: one score per sample required");
  }
  std::vector<std::size_t> parsed;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(rm_scores[i])) {
      throw std::invalid_argument("build_rm_pair: non-finite reward");
    }
    if (samples[i].answer) parsed.push_back(i);
  }
  std::sort(parsed.begin(), parsed.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].sample_idx < samples[b].sample_idx;
  });
  bool distinct = false;
  for (std::size_t i : parsed) {
    if (*samples[i].answer != *samples[parsed.front()].answer) distinct = true;
  }
  if (!distinct) {
    throw DegeneratePool("all extracted answers agree for problem '" +
                         (samples.empty() ? std::string() : samples.front().problem_id) + "'");
  }

  // argmax keeps the lowest sample_idx on ties, argmin the highest.
  std::size_t best = parsed.front();
  for (std::size_t i : parsed) {
    if (rm_scores[i] > rm_scores[best]) best = i;
  }
  std::optional<std::size_t> worst;
  for (std::size_t i : parsed) {
    if (*samples[i].answer == *samples[best].answer) continue;
    if (!worst || rm_scores[i] <= rm_scores[*worst]) worst = i;
  }

  const auto& c = samples[best];
  const auto& r = samples[*worst];
  PreferencePair p;
  p.problem_id = c.problem_id;
  p.chosen_text = c.text;
  p.rejected_text = r.text;
  p.chosen_answer = *c.answer;
  p.rejected_answer = *r.answer;
  p.chosen_votes = count_answer(samples, p.chosen_answer);
  p.rejected_votes = count_answer(samples, p.rejected_answer);
  p.k = static_cast<int>(samples.size());
  p.weight = 1.0;
  p.source = PairSource::Rm;
  return p;
}

std::optional<PreferencePair> build_lmsi_target(const VoteTally& base,
                                                const Threshold& tau) {
  const double tau_votes = tau.resolve(base.k);
  if (base.clusters.empty() || !filter_query(base, tau_votes)) return std::nullopt;
  const auto& top = base.clusters.front();
  PreferencePair p;
  p.problem_id = base.problem_id;
  p.chosen_text = top.representative_text;
  p.chosen_answer = top.answer;
  p.chosen_votes = top.votes;
  p.k = base.k;
  p.weight = 1.0;
  p.source = PairSource::Lmsi;
  p.tau = tau_votes;
  return p;
}

bool participates(const Problem& p, bool transduction) {
  if (p.split == Split::Train) return true;
  return p.split == Split::Test && transduction;
}

bool usable_gold(const Problem& p) {
  return p.gold_answer.has_value() && p.split == Split::Train && p.origin == Origin::Seed;
}

std::vector<PreferencePair> assemble_iteration_pairs(
    std::span<const Problem> problems,
    const std::map<std::string, ProblemEvidence>& evidence,
    const ThresholdSchedule& schedule, const AssembleOptions& options,
    std::vector<PreferencePair>* ties) {
  const Threshold& tau = schedule.at(options.iteration);
  const bool wants_gold =
      options.mode == PairMode::SemiSupervised || options.mode == PairMode::Gold;
  if (wants_gold &&
      std::none_of(problems.begin(), problems.end(), [](const Problem& p) { return usable_gold(p); })) {
    throw MissingGold(std::string(to_string(options.mode)) +
                      " mode needs train problems with gold answers");
  }
  if (options.mode == PairMode::Rm && !options.reward) {
    throw std::invalid_argument("rm mode requires a reward scorer");
  }

  std::vector<PreferencePair> out;
  for (const auto& problem : problems) {
    if (!participates(problem, options.transduction)) continue;
    auto it = evidence.find(problem.id);
    if (it == evidence.end()) continue;
    const ProblemEvidence& ev = it->second;
    const std::uint64_t seed =
        derive_seed(options.seed, "pairs", static_cast<std::uint64_t>(options.iteration), problem.id);

    std::optional<PreferencePair> pair;
    switch (options.mode) {
      case PairMode::Gold:
      case PairMode::SemiSupervised:
        if (usable_gold(problem)) {
          pair = build_gold_pair(ev.base, *problem.gold_answer, seed);
          if (pair) pair->tau = tau.resolve(ev.base_tally.k);
          break;
        }
        if (options.mode == PairMode::Gold) break;
        [[fallthrough]];
      case PairMode::Unsupervised: {
        auto cand = consider_pair(ev.base_tally, ev.high_tally ? &*ev.high_tally : nullptr,
                                  tau, seed);
        if (cand.status == PairStatus::Emitted) {
          pair = std::move(cand.pair);
        } else if (cand.status == PairStatus::Tied && ties != nullptr) {
          cand.pair->iteration = options.iteration;
          ties->push_back(std::move(*cand.pair));
        }
        break;
      }
      case PairMode::Rm: {
        auto scores = options.reward(problem, ev.base);
        try {
          pair = build_rm_pair(ev.base, scores);
          pair->tau = tau.resolve(ev.base_tally.k);
        } catch (const DegeneratePool&) {
        }
        break;
      }
      case PairMode::LmsiTargets:
        pair = build_lmsi_target(ev.base_tally, tau);
        break;
    }
    if (pair) {
      pair->iteration = options.iteration;
      out.push_back(std::move(*pair));
    }
  }
  if (out.empty()) {
    throw EmptyDataset("no preference pairs survived filtering at iteration " +
                       std::to_string(options.iteration));
  }
  std::stable_sort(out.begin(), out.end(), [](const PreferencePair& a, const PreferencePair& b) {
    return a.problem_id < b.problem_id;
  });
  if (ties != nullptr) {
    std::stable_sort(ties->begin(), ties->end(), [](const auto& a, const auto& b) {
      return a.problem_id < b.problem_id;
    });
  }
  return out;
}

}  // namespace scpo
