#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "scpo/backend.hpp"
#include "scpo/error.hpp"
#include "scpo/metrics.hpp"
#include "scpo/synthetic.hpp"

using namespace scpo;

namespace {

SyntheticTaskSpec small_spec() {
  SyntheticTaskSpec s;
  s.n_problems = 50;
  s.n_test = 20;
  s.n_dev = 5;
  s.rng_seed = 4;
  return s;
}

}  // namespace

TEST_CASE("seed model puts `skill` mass on the truth") {
  for (double skill : {0.2, 0.45, 0.6, 0.95}) {
    auto spec = small_spec();
    spec.skill = skill;
    SyntheticTask task(spec);
    const auto model = task.initial_model();
    CHECK(model.head().isZero());
    for (const auto& p : task.problems()) {
      const auto row = model.row_of(p.id);
      const auto probs = softmax(model.logits(row));
      CHECK(std::abs(probs(model.answer_index(row, task.truth(p.id))) - skill) < 1e-6);
      CHECK(std::abs(probs.sum() - 1.0) < 1e-9);
      CHECK(p.gold_answer == task.truth(p.id));
    }
  }
}

TEST_CASE("task layout and answer domains") {
  SyntheticTask task(small_spec());
  CHECK(task.problems().size() == 75);
  CHECK(task.problems().front().id == "train-0000");
  CHECK(task.problems()[50].id == "dev-0000");
  CHECK(task.problems()[55].split == Split::Test);
  const auto model = task.initial_model();
  for (const auto& p : task.problems()) {
    const auto& dom = model.domain(model.row_of(p.id));
    CHECK(dom.size() == 10);
    CHECK(std::set<std::string>(dom.begin(), dom.end()).size() == dom.size());
    const int truth = std::stoi(task.truth(p.id));
    CHECK(truth >= 30);
    CHECK(truth < 300);
    for (const auto& a : dom) CHECK(std::abs(std::abs(std::stoi(a)) - truth) <= 20);
  }
  CHECK_THROWS_AS(task.truth("nope"), UnknownAnswer);
}

TEST_CASE("contested problems give the misconception the larger share") {
  auto spec = small_spec();
  spec.n_problems = 300;
  spec.contested_fraction = 0.5;
  spec.contested_true_mass = 0.3;
  spec.contested_gap = 0.1;
  int contested = 0;
  for (int i = 0; i < spec.n_problems; ++i) {
    const auto d = draw_synthetic_problem(spec, "x" + std::to_string(i), Split::Train, Origin::Seed);
    const auto probs = softmax(d.logits);
    const auto truth_pos = std::find(d.domain.begin(), d.domain.end(), d.truth) - d.domain.begin();
    if (d.contested) {
      ++contested;
      CHECK(probs(truth_pos) == doctest::Approx(0.3));
      CHECK(probs.maxCoeff() == doctest::Approx(0.4));
    } else {
      CHECK(probs(truth_pos) == doctest::Approx(spec.skill));
    }
  }
  CHECK(contested > 100);
  CHECK(contested < 200);

  spec.contested_true_mass = 0.5;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("degenerate skill samples only the truth") {
  auto spec = small_spec();
  spec.skill = 1.0;
  SyntheticTask task(spec);
  auto model = task.initial_model();
  SyntheticBackend backend(task, model);
  SamplingSpec s;
  s.seed = 9;
  for (const auto& p : task.problems()) {
    const auto samples = backend.sample_responses(p, s, Pool::Base);
    REQUIRE(samples.size() == 8);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(samples[i].sample_idx == static_cast<int>(i));
      CHECK(samples[i].answer == task.truth(p.id));
      CHECK(samples[i].pool == Pool::Base);
      CHECK(samples[i].text == "rationale stub\n#### " + task.truth(p.id));
    }
  }
}

TEST_CASE("sampling is deterministic per (problem, seed) and independent of order") {
  SyntheticTask task(small_spec());
  auto model = task.initial_model();
  SyntheticBackend backend(task, model);
  SamplingSpec s;
  s.seed = 77;
  const auto& ps = task.problems();
  const auto forward = backend.sample_batch(ps, s, Pool::Base);
  std::vector<Problem> reversed(ps.rbegin(), ps.rend());
  const auto backward = backend.sample_batch(reversed, s, Pool::Base);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(forward[i] == backward[ps.size() - 1 - i]);
  s.seed = 78;
  CHECK(backend.sample_batch(ps, s, Pool::Base) != forward);
  CHECK(backend.sample_batch(ps, s, Pool::HighTemp) != backend.sample_batch(ps, s, Pool::Base));
}

TEST_CASE("empirical frequencies match the tempered softmax (chi-square, n=1e5)") {
  SyntheticTask task(small_spec());
  auto model = task.initial_model();
  SyntheticBackend backend(task, model);
  const auto& p = task.problems()[3];
  const auto row = model.row_of(p.id);

  for (double temperature : {0.7, 1.2}) {
    SamplingSpec s;
    s.n = 100000;
    s.temperature = temperature;
    s.seed = 5;
    const auto samples = backend.sample_responses(p, s, Pool::Base);
    std::map<std::string, int> counts;
    for (const auto& x : samples) counts[*x.answer]++;

    // Expected probabilities from the logits with a plain loop.
    const auto logits = model.logits(row);
    std::vector<double> w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      w.push_back(std::exp(logits(i) / temperature));
      total += w.back();
    }
    double chi2 = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double expected = s.n * w[static_cast<std::size_t>(i)] / total;
      const double observed = counts[model.domain(row)[static_cast<std::size_t>(i)]];
      chi2 += (observed - expected) * (observed - expected) / expected;
    }
    // 0.999 quantile of chi-square with 9 degrees of freedom.
    CHECK(chi2 < 27.877);
  }
}

TEST_CASE("uniform policy: mean top vote share matches exact multinomial enumeration") {
  // A=3, k=4: enumerate all 3^4 equally likely outcomes.
  double exact = 0.0;
  for (int code = 0; code < 81; ++code) {
    int c[3] = {0, 0, 0};
    int x = code;
    for (int j = 0; j < 4; ++j) {
      c[x % 3]++;
      x /= 3;
    }
    exact += std::max({c[0], c[1], c[2]}) / 4.0 / 81.0;
  }
  // By hand: E[max count] = (3*4 + 24*3 + 54*2) / 81 = 192/81.
  CHECK(exact == doctest::Approx(48.0 / 81.0).epsilon(1e-14));

  SyntheticTaskSpec spec;
  spec.n_problems = 6000;
  spec.n_test = 0;
  spec.answer_domain = 3;
  spec.skill = 1.0 / 3.0;
  spec.noise_spread = 0.0;
  spec.rng_seed = 12;
  SyntheticTask task(spec);
  auto model = task.initial_model();
  SyntheticBackend backend(task, model);
  SamplingSpec s;
  s.n = 4;
  s.seed = 3;
  std::vector<VoteTally> tallies;
  for (const auto& batch : backend.sample_batch(task.problems(), s, Pool::Base)) {
    tallies.push_back(tally_votes(batch, ExtractorKind::HashNumber, 1));
  }
  // Standard error of the mean is about 0.0016 here.
  CHECK(std::abs(mean_top_vote_share(tallies) - exact) < 0.008);
}

TEST_CASE("sampling_distribution") {
  const Eigen::VectorXd logits = (Eigen::VectorXd(4) << std::log(0.5), std::log(0.3),
                                  std::log(0.15), std::log(0.05))
                                     .finished();
  const auto full = sampling_distribution(logits, 1.0, 1.0);
  CHECK(full(0) == doctest::Approx(0.5));
  CHECK(full(3) == doctest::Approx(0.05));
  const auto nucleus = sampling_distribution(logits, 1.0, 0.7);
  CHECK(nucleus(0) == doctest::Approx(0.5 / 0.8));
  CHECK(nucleus(1) == doctest::Approx(0.3 / 0.8));
  CHECK(nucleus(2) == 0.0);
  CHECK(nucleus(3) == 0.0);
  const auto cold = sampling_distribution(logits, 0.5, 1.0);
  CHECK(cold(0) == doctest::Approx(0.25 / (0.25 + 0.09 + 0.0225 + 0.0025)));
}

TEST_CASE("greedy decoding commits to the heaviest prefix") {
  PolicyModel m(4, 0);
  // Argmax is "50", but the '-' prefix carries 0.6 of the mass.
  m.add_problem("trap", {"50", "-41", "-42", "-43"},
                (Eigen::VectorXd(4) << std::log(0.4), std::log(0.2), std::log(0.2), std::log(0.2))
                    .finished());
  m.add_problem("clear", {"50", "-41", "-42", "-43"},
                (Eigen::VectorXd(4) << std::log(0.55), std::log(0.15), std::log(0.15), std::log(0.15))
                    .finished());
  m.add_problem("nested", {"5", "51", "52", "7"},
                (Eigen::VectorXd(4) << std::log(0.3), std::log(0.25), std::log(0.25), std::log(0.2))
                    .finished());
  CHECK(greedy_answer(m, m.row_of("trap")) == "-41");
  CHECK(greedy_answer(m, m.row_of("clear")) == "50");
  // After '5' the end of string (0.3) beats '1' and '2' (0.25 each).
  CHECK(greedy_answer(m, m.row_of("nested")) == "5");
}

TEST_CASE("greedy accuracy fixtures") {
  PolicyModel m(3, 0);
  m.add_problem("a", {"1", "2", "3"}, (Eigen::VectorXd(3) << 5, 0, 0).finished());
  m.add_problem("b", {"1", "2", "3"}, (Eigen::VectorXd(3) << 0, 5, 0).finished());
  std::vector<Problem> right{{"a", "", "1", Split::Test, Origin::Seed},
                             {"b", "", "2", Split::Test, Origin::Seed}};
  std::vector<Problem> wrong{{"a", "", "3", Split::Test, Origin::Seed},
                             {"b", "", "3", Split::Test, Origin::Seed}};
  CHECK(greedy_accuracy(m, right) == 1.0);
  CHECK(greedy_accuracy(m, wrong) == 0.0);
  std::vector<Problem> unlabeled{{"a", "", std::nullopt, Split::Test, Origin::Seed}};
  CHECK_THROWS_AS(greedy_accuracy(m, unlabeled), MissingGold);

  // skill 0.6: the truth is the argmax and greedy is always right; with
  // skill 0.3 spread over a shared prefix greedy fails.
  auto spec = small_spec();
  spec.skill = 0.6;
  spec.prefix_trap_fraction = 1.0;
  SyntheticTask high(spec);
  CHECK(greedy_accuracy(high.initial_model(), high.problems()) == 1.0);
  spec.skill = 0.3;
  SyntheticTask low(spec);
  CHECK(greedy_accuracy(low.initial_model(), low.problems()) == 0.0);
}

TEST_CASE("generate_queries") {
  SyntheticTask task(small_spec());
  auto model = task.initial_model();
  SyntheticBackend backend(task, model);
  SamplingSpec s;
  CHECK(backend.generate_queries(task.problems(), 4, 0, s, "gen").empty());
  const auto before = model.problem_count();
  const auto gen = backend.generate_queries(task.problems(), 4, 5, s, "gen-i1");
  REQUIRE(gen.size() == 5);
  CHECK(gen[0].id == "gen-i1-0000");
  for (const auto& p : gen) {
    CHECK(p.origin == Origin::Generated);
    CHECK_FALSE(p.gold_answer);
    CHECK(task.knows(p.id));
    CHECK(model.has_problem(p.id));
  }
  CHECK(model.problem_count() == before + 5);
  // Re-issuing the same ids produces duplicate texts, which are dropped.
  std::vector<Problem> seeds(task.problems());
  seeds.insert(seeds.end(), gen.begin(), gen.end());
  CHECK(backend.generate_queries(seeds, 4, 5, s, "gen-i1").empty());
  CHECK_THROWS_AS(backend.generate_queries(task.problems(), 0, 2, s, "g"), ValidationError);
}

TEST_CASE("noisy reward model") {
  std::map<std::string, std::string> truths{{"p", "5"}};
  NoisyRewardModel exact(truths, 0.0, 1);
  ResponseSample right{"p", 0, 0.7, "#### 5", "5", Pool::Base, false};
  ResponseSample wrong{"p", 1, 0.7, "#### 4", "4", Pool::Base, false};
  ResponseSample none{"p", 2, 0.7, "nothing", std::nullopt, Pool::Base, false};
  CHECK(exact.score(right) == 1.0);
  CHECK(exact.score(wrong) == 0.0);
  CHECK(exact.score(none) == 0.0);

  // P[wrong outscores right] = Phi(-1 / (sigma * sqrt 2)).
  const double sigma = 1.5;
  NoisyRewardModel noisy(truths, sigma, 2);
  int flips = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    right.sample_idx = 2 * i;
    wrong.sample_idx = 2 * i + 1;
    flips += noisy.score(wrong) > noisy.score(right);
  }
  const double expected = 0.5 * std::erfc(1.0 / (sigma * std::sqrt(2.0)) / std::sqrt(2.0));
  CHECK(std::abs(static_cast<double>(flips) / n - expected) < 0.015);
  CHECK(noisy.score(right) == noisy.score(right));
}

TEST_CASE("sampling spec validation") {
  SamplingSpec s;
  CHECK_NOTHROW(s.validate());
  s.n = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SamplingSpec{};
  s.top_p = 1.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SamplingSpec{};
  s.temperature = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
