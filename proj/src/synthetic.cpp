#include "scpo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

namespace {

constexpr int kAnswerLow = 30;
constexpr int kAnswerHigh = 300;  // exclusive

std::string pad_id(std::string_view prefix, int i) {
  std::string n = std::to_string(i);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return std::string(prefix) + "-" + n;
}

double contested_true(const SyntheticTaskSpec& s) {
  return s.contested_true_mass < 0 ? s.skill : s.contested_true_mass;
}

}  // namespace

void SyntheticTaskSpec::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ValidationError("synthetic." + key + ": " + why);
  };
  if (n_problems <= 0) fail("n_problems", "must be positive");
  if (n_dev < 0) fail("n_dev", "must be >= 0");
  if (n_test < 0) fail("n_test", "must be >= 0");
  if (answer_domain <= 0) fail("answer_domain", "must be positive");
  if (!(skill > 0.0 && skill <= 1.0)) fail("skill", "must be in (0,1]");
  if (!(noise_spread >= 0.0)) fail("noise_spread", "must be >= 0");
  if (!(prefix_trap_fraction >= 0.0 && prefix_trap_fraction <= 1.0))
    fail("prefix_trap_fraction", "must be in [0,1]");
  if (!(contested_fraction >= 0.0 && contested_fraction <= 1.0))
    fail("contested_fraction", "must be in [0,1]");
  if (contested_fraction > 0.0) {
    if (answer_domain < 3) fail("answer_domain", "contested problems need at least 3 answers");
    const double t = contested_true(*this);
    if (!(t > 0.0) || !(contested_gap >= 0.0) || 2 * t + contested_gap >= 1.0)
      fail("contested_true_mass", "need 0 < 2*mass + gap < 1");
  }
  if (feature_dim < 0) fail("feature_dim", "must be >= 0");
  if (!(feature_noise >= 0.0)) fail("feature_noise", "must be >= 0");
  if (answer_span <= 0 || 2 * answer_span < answer_domain - 1)
    fail("answer_span", "too small for the answer domain");
  if (answer_span >= kAnswerLow) fail("answer_span", "must be below " + std::to_string(kAnswerLow));
}

SyntheticDraw draw_synthetic_problem(const SyntheticTaskSpec& spec, const std::string& id,
                                     Split split, Origin origin) {
  Rng rng(derive_seed(spec.rng_seed, "task", 0, id));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int a = spec.answer_domain;

  const int truth = std::uniform_int_distribution<int>(kAnswerLow, kAnswerHigh - 1)(rng);
  std::vector<int> near;
  for (int v = truth - spec.answer_span; v <= truth + spec.answer_span; ++v) {
    if (v != truth) near.push_back(v);
  }
  std::shuffle(near.begin(), near.end(), rng);
  const bool trap = uniform01(rng) < spec.prefix_trap_fraction;
  const bool contested = a >= 3 && uniform01(rng) < spec.contested_fraction;

  // slot 0 = truth, slot 1 = misconception, then the rest.
  std::vector<std::string> raw{std::to_string(truth)};
  for (int j = 0; j < a - 1; ++j) {
    raw.push_back((trap ? "-" : "") + std::to_string(near[static_cast<std::size_t>(j)]));
  }
  std::vector<int> order(static_cast<std::size_t>(a));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);  // order[pos] = slot

  Eigen::VectorXd z(a);
  for (int j = 0; j < a; ++j) z(j) = spec.noise_spread * normal(rng);

  // Masses per slot.
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(a);
  if (a == 1) {
    mass(0) = 1.0;
  } else if (contested) {
    const double t = contested_true(spec);
    mass(0) = t;
    mass(1) = t + spec.contested_gap;
    const double rest = 1.0 - mass(0) - mass(1);
    const Eigen::VectorXd q = softmax(z.tail(a - 2));
    mass.tail(a - 2) = rest * q;
  } else {
    mass(0) = spec.skill;
    const double rest = std::max(1.0 - spec.skill, 1e-12);
    mass.tail(a - 1) = rest * softmax(z.tail(a - 1));
  }

  Eigen::MatrixXd slot_features(a, spec.feature_dim);
  for (int j = 0; j < a; ++j) {
    for (int c = 0; c < spec.feature_dim; ++c) slot_features(j, c) = spec.feature_noise * normal(rng);
  }
  if (spec.feature_dim >= 1) slot_features(0, 0) += spec.feature_signal;
  if (spec.feature_dim >= 2 && a >= 2) slot_features(1, 1) += spec.misconception_signal;

  SyntheticDraw d;
  d.truth = raw[0];
  d.trap = trap;
  d.contested = contested;
  d.logits.resize(a);
  d.features.resize(a, spec.feature_dim);
  for (int pos = 0; pos < a; ++pos) {
    const int slot = order[static_cast<std::size_t>(pos)];
    d.domain.push_back(raw[static_cast<std::size_t>(slot)]);
    d.logits(pos) = std::log(mass(slot));
    d.features.row(pos) = slot_features.row(slot);
  }
  d.problem.id = id;
  d.problem.text = "Synthetic problem " + id + ": report the value of the hidden quantity.";
  d.problem.split = split;
  d.problem.origin = origin;
  if (origin == Origin::Seed) d.problem.gold_answer = d.truth;
  return d;
}

SyntheticTask::SyntheticTask(SyntheticTaskSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  auto add = [&](std::string_view prefix, int n, Split split) {
    for (int i = 0; i < n; ++i) {
      auto d = draw_synthetic_problem(spec_, pad_id(prefix, i), split, Origin::Seed);
      truths_[d.problem.id] = d.truth;
      problems_.push_back(std::move(d.problem));
    }
  };
  add("train", spec_.n_problems, Split::Train);
  add("dev", spec_.n_dev, Split::Dev);
  add("test", spec_.n_test, Split::Test);
}

PolicyModel SyntheticTask::initial_model() const {
  PolicyModel m(spec_.answer_domain, spec_.feature_dim);
  for (const auto& p : problems_) {
    auto d = draw_synthetic_problem(spec_, p.id, p.split, p.origin);
    m.add_problem(p.id, std::move(d.domain), d.logits, d.features);
  }
  return m;
}

const std::string& SyntheticTask::truth(const std::string& problem_id) const {
  auto it = truths_.find(problem_id);
  if (it == truths_.end()) throw UnknownAnswer("no ground truth for '" + problem_id + "'");
  return it->second;
}

Problem SyntheticTask::generate(const std::string& id, PolicyModel& model) {
  auto d = draw_synthetic_problem(spec_, id, Split::Train, Origin::Generated);
  if (!model.has_problem(id)) model.add_problem(id, std::move(d.domain), d.logits, d.features);
  truths_[id] = d.truth;
  return d.problem;
}

double NoisyRewardModel::score(const ResponseSample& s) const {
  Rng rng(derive_seed(seed_, "reward", static_cast<std::uint64_t>(s.sample_idx),
                      s.problem_id + "/" + std::string(to_string(s.pool))));
  const double noise = sigma_ > 0 ? std::normal_distribution<double>(0.0, sigma_)(rng) : 0.0;
  auto it = truths_.find(s.problem_id);
  const bool correct = s.answer && it != truths_.end() && *s.answer == it->second;
  return (correct ? 1.0 : 0.0) + noise;
}

std::vector<double> NoisyRewardModel::score_all(std::span<const ResponseSample> samples) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(score(s));
  return out;
}

}  // namespace scpo
