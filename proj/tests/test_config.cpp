#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "scpo/config.hpp"
#include "scpo/error.hpp"

using namespace scpo;

TEST_CASE("empty config gives the defaults") {
  const auto c = parse_config("");
  CHECK(c.k == 8);
  CHECK(c.temperature == 0.7);
  CHECK(c.top_p == 0.9);
  CHECK(c.high_temperature == 1.2);
  CHECK(c.loss.beta == 0.5);
  CHECK(c.loss.alpha == 1.0);
  CHECK(c.train.epochs == 10);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.iterations == 2);
  CHECK(c.train.learning_rate == 0.1);
  CHECK(c.tau.values == std::vector<Threshold>{Threshold::fraction(0.5), Threshold::fraction(0.7)});
  CHECK(c.n_shots == 4);
  CHECK(c.max_tokens == 1024);
  CHECK(c.http.concurrency == 8);
  CHECK(c.http.max_attempts == 3);
  CHECK(c.mode == PairMode::Unsupervised);
  CHECK(c.loss.objective == Objective::Scpo);
  CHECK(c == RunConfig{});
  CHECK(parse_config("# only a comment\n") == RunConfig{});
}

TEST_CASE("tau forms") {
  CHECK(parse_config("tau: 0.5k").tau.values == std::vector<Threshold>{Threshold::fraction(0.5)});
  CHECK(parse_config("tau: 2").tau.values == std::vector<Threshold>{Threshold::absolute(2)});
  CHECK(parse_config("tau: [0.5k, 0.6k]").tau.values ==
        std::vector<Threshold>{Threshold::fraction(0.5), Threshold::fraction(0.6)});
  CHECK_THROWS_AS(parse_config("tau: 1.5k"), ValidationError);
  CHECK_THROWS_AS(parse_config("tau: []"), ValidationError);
}

TEST_CASE("validation names the offending key") {
  auto message = [](const std::string& yaml) -> std::string {
    try {
      parse_config(yaml);
    } catch (const ValidationError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("k: 0").starts_with("k:"));
  CHECK(message("temperature: -1").starts_with("temperature:"));
  CHECK(message("top_p: 0").starts_with("top_p:"));
  CHECK(message("beta: 0").starts_with("beta:"));
  CHECK(message("alpha: -0.5").starts_with("alpha:"));
  CHECK(message("epochs: -1").find("epochs") != std::string::npos);
  CHECK(message("k: eight").starts_with("k: invalid value"));
  CHECK(message("kk: 8") == "kk: unknown key");
  CHECK(message("synthetic:\n  skil: 0.5\n") == "synthetic.skil: unknown key");
  CHECK(message("synthetic:\n  skill: 1.5\n").starts_with("synthetic.skill:"));
  CHECK(message("http:\n  concurrency: 0\n") == "http.concurrency: unknown key");
  CHECK(message("concurrency: 0").find("concurrency") != std::string::npos);
  CHECK(message("mode: weird").starts_with("mode:"));
  CHECK(message("mode: lmsi\nobjective: scpo\n").find("lmsi") != std::string::npos);
  CHECK(message("- 1\n- 2\n").starts_with("config:"));
}

TEST_CASE("malformed YAML reports line and column") {
  try {
    parse_config("k: 8\ntau: [0.5k, 0.7k\nbeta: 0.5\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 2);
    CHECK(e.column() >= 1);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
    CHECK(e.kind() == "ParseError");
  }
  try {
    parse_config("k: 8\n  beta: [\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("full config parses") {
  const auto c = parse_config(R"(
k: 16
temperature: 0.8
top_p: 0.95
tau: [0.5k, 0.6k]
beta: 0.3
alpha: 0.0
objective: unweighted
lr: 0.05
schedule: cosine
epochs: 4
batch_size: 8
iterations: 3
seed: 99
extractor: boxed
mode: semi
transduction: true
gen_queries: 50
gen_filter_tau: 0.6k
rm_sigma: 1.5
eval_split: dev
backend: http
concurrency: 4
http:
  base_url: https://example.invalid/v1
  model: served
synthetic:
  n_problems: 10
  n_dev: 5
  skill: 0.4
  contested_fraction: 0.3
)");
  CHECK(c.k == 16);
  CHECK(c.loss.objective == Objective::Unweighted);
  CHECK(c.train.schedule == Schedule::Cosine);
  CHECK(c.extractor == ExtractorKind::Boxed);
  CHECK(c.mode == PairMode::SemiSupervised);
  CHECK(c.transduction);
  CHECK(c.eval_split == Split::Dev);
  CHECK(c.backend == BackendKind::Http);
  CHECK(c.http.concurrency == 4);
  CHECK(c.http.model == "served");
  CHECK(c.synthetic.n_dev == 5);
  CHECK(c.synthetic.contested_fraction == 0.3);
  CHECK(c.base_spec(7).n == 16);
  CHECK(c.base_spec(7).seed == 7);
  CHECK(c.high_temp_spec(7).temperature == 1.2);

  const auto lmsi = parse_config("mode: lmsi-targets");
  CHECK(lmsi.loss.objective == Objective::Lmsi);
}

TEST_CASE("overrides") {
  const std::vector<std::string> sets{"k=4", "synthetic.skill=0.6", "tau=[0.3k]"};
  const auto c = parse_config("k: 8\nsynthetic:\n  n_problems: 20\n", sets);
  CHECK(c.k == 4);
  CHECK(c.synthetic.skill == 0.6);
  CHECK(c.synthetic.n_problems == 20);
  CHECK(c.tau.values == std::vector<Threshold>{Threshold::fraction(0.3)});
  const std::vector<std::string> bad{"nonsense"};
  CHECK_THROWS_AS(parse_config("", bad), ValidationError);
  const std::vector<std::string> unknown{"synthetic.nope=1"};
  CHECK_THROWS_AS(parse_config("", unknown), ValidationError);
}

TEST_CASE("config files, echo and hash") {
  const auto path = (std::filesystem::temp_directory_path() / "scpo-config-test.yaml").string();
  std::ofstream(path) << "";
  CHECK(load_config(path) == RunConfig{});
  std::ofstream(path) << "seed: 5\n";
  const auto c = load_config(path);
  CHECK(c.seed == 5);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), IoError);

  CHECK(config_hash(RunConfig{}) == config_hash(parse_config("")));
  CHECK(config_hash(RunConfig{}) != config_hash(c));
  CHECK(config_hash(c).size() == 16);
  const auto echo = config_to_json(RunConfig{});
  CHECK(echo.begin().key() == "k");
  CHECK(echo["tau"] == nlohmann::ordered_json::array({"0.5k", "0.7k"}));
}
