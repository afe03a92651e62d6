#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "scpo/error.hpp"
#include "scpo/pairs.hpp"
#include "support.hpp"

using namespace scpo;
using scpo::testing::evidence_of;
using scpo::testing::problem;
using scpo::testing::samples_with;
using scpo::testing::tally_of;

TEST_CASE("threshold parsing and resolution") {
  CHECK(Threshold::parse("0.5k") == Threshold::fraction(0.5));
  CHECK(Threshold::parse("2") == Threshold::absolute(2));
  CHECK(Threshold::parse(" 0.7K ").form() == Threshold::Form::FractionOfK);
  CHECK(Threshold::fraction(0.5).resolve(8) == 4.0);
  CHECK(Threshold::absolute(2).resolve(16) == 2.0);
  CHECK(Threshold::fraction(0.7).to_string() == "0.7k");
  CHECK_THROWS_AS(Threshold::parse("1.5k"), ValidationError);
  CHECK_THROWS_AS(Threshold::parse("0"), ValidationError);
  CHECK_THROWS_AS(Threshold::parse("half"), ValidationError);

  ThresholdSchedule s{{Threshold::fraction(0.5), Threshold::fraction(0.7)}};
  CHECK(s.at(0) == Threshold::fraction(0.5));
  CHECK(s.at(1) == Threshold::fraction(0.7));
  CHECK(s.at(5) == Threshold::fraction(0.7));
}

TEST_CASE("filter_query examples") {
  CHECK(filter_query(tally_of("p", {"1", "1", "1", "1", "1", "2", "2", "2"}), 4.0));
  CHECK_FALSE(filter_query(tally_of("p", {"1", "2", "3", "4", "5", "6", "7", "8"}), 4.0));
  std::vector<std::string> sixteen(16, "");
  sixteen[3] = sixteen[9] = "6";
  CHECK(filter_query(tally_of("p", sixteen), Threshold::absolute(2).resolve(16)));
}

TEST_CASE("build_pair examples") {
  const auto base = tally_of("p", {"5", "5", "5", "3", "2", "5", "3", "5"});
  auto pair = build_pair(base, nullptr, Threshold::fraction(0.5), 1);
  REQUIRE(pair);
  CHECK(pair->chosen_answer == "5");
  CHECK(pair->rejected_answer == "2");
  CHECK(pair->chosen_votes == 5);
  CHECK(pair->rejected_votes == 1);
  CHECK(pair->weight == 0.5);
  CHECK(pair->tau == 4.0);
  CHECK(pair->source == PairSource::Consistency);
  CHECK(pair->chosen_text == SyntheticBackend::render_response("5"));

  const auto unanimous = tally_of("p", std::vector<std::string>(8, "7"));
  const auto high = tally_of("p", {"7", "7", "9", "7", "7", "9", "7", "7"});
  pair = build_pair(unanimous, &high, Threshold::fraction(0.5), 1);
  REQUIRE(pair);
  CHECK(pair->chosen_answer == "7");
  CHECK(pair->rejected_answer == "9");
  CHECK(pair->rejected_votes == 0);
  CHECK(pair->weight == 1.0);

  CHECK_FALSE(build_pair(unanimous, nullptr, Threshold::fraction(0.5), 1));
  const auto same_high = tally_of("p", std::vector<std::string>(8, "7"));
  CHECK(consider_pair(unanimous, &same_high, Threshold::fraction(0.5), 1).status ==
        PairStatus::NoRejected);

  const auto tied = tally_of("p", {"4", "6", "4", "6", "4", "6", "4", "6"});
  CHECK_FALSE(build_pair(tied, nullptr, Threshold::fraction(0.5), 1));
  const auto cand = consider_pair(tied, nullptr, Threshold::fraction(0.5), 1);
  CHECK(cand.status == PairStatus::Tied);
  REQUIRE(cand.pair);
  CHECK(cand.pair->weight == 0.0);

  const auto weak = tally_of("p", {"1", "1", "1", "2", "3", "4", "5", "6"});
  CHECK(consider_pair(weak, nullptr, Threshold::fraction(0.5), 1).status ==
        PairStatus::BelowThreshold);
}

TEST_CASE("rejected answers tied at the minimum are all reachable") {
  const auto base = tally_of("p", {"1", "1", "1", "1", "1", "2", "3", "4"});
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    seen.insert(build_pair(base, nullptr, Threshold::fraction(0.5), seed)->rejected_answer);
  }
  CHECK(seen == std::set<std::string>{"2", "3", "4"});
}

TEST_CASE("build_gold_pair examples") {
  auto pair = build_gold_pair(samples_with("p", {"5", "5", "3"}), "5", 3);
  REQUIRE(pair);
  CHECK(pair->chosen_answer == "5");
  CHECK(pair->rejected_answer == "3");
  CHECK(pair->weight == 1.0);
  CHECK(pair->source == PairSource::Gold);
  CHECK_FALSE(build_gold_pair(samples_with("p", {"5", "5", "5"}), "5", 3));
  CHECK_FALSE(build_gold_pair(samples_with("p", {"1", "2", "3"}), "9", 3));
  CHECK_FALSE(build_gold_pair(samples_with("p", {"5", "", ""}), "5", 3));
}

TEST_CASE("build_rm_pair examples") {
  const auto s = samples_with("p", {"1", "2", "3"});
  const std::vector<double> scores{0.9, 0.1, 0.5};
  auto pair = build_rm_pair(s, scores);
  CHECK(pair.chosen_answer == "1");
  CHECK(pair.rejected_answer == "2");
  CHECK(pair.weight == 1.0);
  CHECK(pair.source == PairSource::Rm);

  const std::vector<double> flat{0.5, 0.5, 0.5};
  pair = build_rm_pair(s, flat);
  CHECK(pair.chosen_answer == "1");
  CHECK(pair.rejected_answer == "3");

  const auto same = samples_with("p", {"4", "4", "4"});
  CHECK_THROWS_AS(build_rm_pair(same, flat), DegeneratePool);

  // The lowest score belongs to the chosen answer: the rejected side moves
  // to the worst differing answer.
  const auto dup = samples_with("p", {"1", "1", "2"});
  const std::vector<double> dup_scores{0.9, -3.0, 0.2};
  pair = build_rm_pair(dup, dup_scores);
  CHECK(pair.chosen_answer == "1");
  CHECK(pair.rejected_answer == "2");
}

TEST_CASE("build_lmsi_target") {
  const auto base = tally_of("p", {"5", "5", "5", "3", "2", "5", "3", "5"});
  auto t = build_lmsi_target(base, Threshold::fraction(0.5));
  REQUIRE(t);
  CHECK(t->chosen_answer == "5");
  CHECK(t->rejected_answer.empty());
  CHECK(t->source == PairSource::Lmsi);
  CHECK_FALSE(build_lmsi_target(base, Threshold::fraction(0.7)));
}

TEST_CASE("participation and gold visibility") {
  const auto train = problem("a", "1");
  const auto dev = problem("b", "1", Split::Dev);
  const auto test = problem("c", "1", Split::Test);
  const auto gen = problem("d", "1", Split::Train, Origin::Generated);
  CHECK(participates(train, false));
  CHECK_FALSE(participates(dev, true));
  CHECK_FALSE(participates(test, false));
  CHECK(participates(test, true));
  CHECK(usable_gold(train));
  CHECK_FALSE(usable_gold(test));
  CHECK_FALSE(usable_gold(gen));
}

namespace {

ThresholdSchedule half() { return ThresholdSchedule{{Threshold::fraction(0.5)}}; }

}  // namespace

TEST_CASE("assemble: semi-supervised with every problem labeled matches gold mode") {
  std::vector<Problem> problems;
  std::map<std::string, ProblemEvidence> ev;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 30; ++i) {
    const std::string id = "p" + std::to_string(i);
    problems.push_back(problem(id, "1"));
    ev[id] = evidence_of(id, scpo::testing::random_answers(rng, 8, 3, 0.1));
  }
  AssembleOptions semi{PairMode::SemiSupervised, false, 0, 42, {}};
  AssembleOptions gold{PairMode::Gold, false, 0, 42, {}};
  const auto a = assemble_iteration_pairs(problems, ev, half(), semi);
  const auto b = assemble_iteration_pairs(problems, ev, half(), gold);
  CHECK(a == b);
  for (const auto& p : a) CHECK(p.weight == 1.0);
}

TEST_CASE("assemble: mixed gold and consistency problems") {
  std::vector<Problem> problems{problem("g1", "5"), problem("g2", "2"), problem("u1"),
                                problem("u2")};
  std::map<std::string, ProblemEvidence> ev;
  ev["g1"] = evidence_of("g1", {"5", "3", "5", "5"});
  ev["g2"] = evidence_of("g2", {"1", "2", "1", "1"});
  ev["u1"] = evidence_of("u1", {"7", "7", "7", "8"});
  ev["u2"] = evidence_of("u2", {"4", "4", "4", "4"}, {"4", "6", "4", "4"});
  AssembleOptions opt{PairMode::SemiSupervised, false, 0, 1, {}};
  const auto pairs = assemble_iteration_pairs(problems, ev, half(), opt);
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].problem_id == "g1");
  CHECK(pairs[0].weight == 1.0);
  CHECK(pairs[1].problem_id == "g2");
  CHECK(pairs[1].chosen_answer == "2");
  CHECK(pairs[1].weight == 1.0);
  CHECK(pairs[2].problem_id == "u1");
  CHECK(pairs[2].weight == 0.5);
  CHECK(pairs[3].problem_id == "u2");
  CHECK(pairs[3].weight == 1.0);
  CHECK(pairs[3].source == PairSource::Consistency);
}

TEST_CASE("assemble: errors and transduction") {
  std::vector<Problem> problems{problem("a"), problem("t", "3", Split::Test)};
  std::map<std::string, ProblemEvidence> ev;
  ev["a"] = evidence_of("a", {"1", "2", "3", "4"});
  ev["t"] = evidence_of("t", {"3", "3", "3", "9"});
  AssembleOptions opt{PairMode::Unsupervised, false, 0, 1, {}};
  CHECK_THROWS_AS(assemble_iteration_pairs(problems, ev, half(), opt), EmptyDataset);
  opt.transduction = true;
  const auto pairs = assemble_iteration_pairs(problems, ev, half(), opt);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].problem_id == "t");
  CHECK(pairs[0].source == PairSource::Consistency);

  AssembleOptions semi{PairMode::SemiSupervised, true, 0, 1, {}};
  std::vector<Problem> unlabeled{problem("a"), problem("t", "3", Split::Test)};
  CHECK_THROWS_AS(assemble_iteration_pairs(unlabeled, ev, half(), semi), MissingGold);

  AssembleOptions rm{PairMode::Rm, false, 0, 1, {}};
  CHECK_THROWS_AS(assemble_iteration_pairs(problems, ev, half(), rm), std::invalid_argument);
}

TEST_CASE("assemble: ties are reported, output is sorted and deterministic") {
  std::vector<Problem> problems{problem("z"), problem("m"), problem("b")};
  std::map<std::string, ProblemEvidence> ev;
  ev["z"] = evidence_of("z", {"1", "1", "1", "2"});
  ev["m"] = evidence_of("m", {"1", "1", "2", "2"});
  ev["b"] = evidence_of("b", {"5", "5", "5", "6"});
  AssembleOptions opt{PairMode::Unsupervised, false, 0, 1, {}};
  std::vector<PreferencePair> ties;
  const auto pairs = assemble_iteration_pairs(problems, ev, half(), opt, &ties);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].problem_id == "b");
  CHECK(pairs[1].problem_id == "z");
  REQUIRE(ties.size() == 1);
  CHECK(ties[0].problem_id == "m");
  CHECK(assemble_iteration_pairs(problems, ev, half(), opt) == pairs);
}

TEST_CASE("assemble: rm and lmsi modes") {
  std::vector<Problem> problems{problem("a"), problem("b")};
  std::map<std::string, ProblemEvidence> ev;
  ev["a"] = evidence_of("a", {"1", "1", "2", "3"});
  ev["b"] = evidence_of("b", {"4", "4", "4", "4"});
  AssembleOptions rm{PairMode::Rm, false, 0, 1,
                     [](const Problem&, std::span<const ResponseSample> s) {
                       std::vector<double> out;
                       for (const auto& x : s) out.push_back(x.answer == "3" ? 1.0 : 0.0);
                       return out;
                     }};
  const auto pairs = assemble_iteration_pairs(problems, ev, half(), rm);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].chosen_answer == "3");
  CHECK(pairs[0].source == PairSource::Rm);

  AssembleOptions lmsi{PairMode::LmsiTargets, false, 0, 1, {}};
  const auto targets = assemble_iteration_pairs(problems, ev, half(), lmsi);
  REQUIRE(targets.size() == 2);
  CHECK(targets[1].chosen_answer == "4");
}

TEST_CASE("consistency pairs agree with a counting oracle on random tallies") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 3000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 12);
    const auto answers = scpo::testing::random_answers(rng, k, 1 + static_cast<int>(rng() % 4), 0.1);
    const auto tau = Threshold::fraction(0.1 * static_cast<double>(1 + rng() % 10));

    std::map<std::string, int> counts;
    for (const auto& a : answers) {
      if (!a.empty()) counts[a]++;
    }
    int top = 0;
    for (const auto& [a, c] : counts) top = std::max(top, c);
    int least_other = -1;
    bool skipped_top = false;
    std::vector<int> rest;
    for (const auto& [a, c] : counts) {
      if (c == top && !skipped_top) {
        skipped_top = true;
        continue;
      }
      rest.push_back(c);
    }
    if (!rest.empty()) least_other = *std::min_element(rest.begin(), rest.end());
    const bool expect = top >= tau.resolve(k) && least_other >= 0 && top > least_other;

    const auto tally = tally_of("p", answers, rng());
    const auto pair = build_pair(tally, nullptr, tau, rng());
    REQUIRE(pair.has_value() == expect);
    if (pair) {
      CHECK(pair->chosen_votes == top);
      CHECK(pair->rejected_votes == least_other);
      CHECK(pair->weight == doctest::Approx(static_cast<double>(top - least_other) / k).epsilon(1e-15));
      CHECK(pair->chosen_answer != pair->rejected_answer);
    }
  }
}
