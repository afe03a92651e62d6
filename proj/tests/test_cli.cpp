#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "scpo/io.hpp"

#ifndef SCPO_BIN
#error "SCPO_BIN must name the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("scpo-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::string kSets =
    " --config default --set synthetic.n_problems=30 --set synthetic.n_test=20 --set epochs=2 --set seed=3 --set iterations=1";

int run(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(SCPO_BIN) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("the stage-by-stage chain reproduces run") {
  TempDir d;
  const auto log = d / "log.txt";
  REQUIRE(run("run" + kSets + " --out " + d / "full", log) == 0);
  REQUIRE(run("init" + kSets + " --out " + d / "m", log) == 0);
  REQUIRE(run("sample" + kSets + " --problems " + d / "m/problems.jsonl" + " --model " + d / "m/model.json" +
                  " --iteration 0 --out " + d / "m/samples.jsonl",
              log) == 0);
  REQUIRE(run("vote" + kSets + " --samples " + d / "m/samples.jsonl" + " --iteration 0 --out " +
                  d / "m/tallies.jsonl",
              log) == 0);
  CHECK(scpo::read_text(log).find("mean_top_vote_share") != std::string::npos);
  REQUIRE(run("build-pairs" + kSets + " --problems " + d / "m/problems.jsonl" + " --samples " +
                  d / "m/samples.jsonl" + " --iteration 0 --out " + d / "m/pairs.jsonl" + " --dpo-out " +
                  d / "m/dpo.jsonl",
              log) == 0);
  REQUIRE(run("train" + kSets + " --model " + d / "m/model.json" + " --pairs " + d / "m/pairs.jsonl" +
                  " --iteration 0 --out " + d / "m/model_1.json",
              log) == 0);

  const bool same_seed = scpo::read_text(d / "m/model.json") == scpo::read_text(d / "full/model_0.json");
  CHECK(same_seed);
  for (const std::string f : {"samples.jsonl", "tallies.jsonl", "pairs.jsonl"}) {
    const bool same = scpo::read_text(d / ("m/" + f)) == scpo::read_text(d / ("full/iteration_1/" + f));
    CHECK_MESSAGE(same, f);
  }
  const bool same_model = scpo::read_text(d / "m/model_1.json") == scpo::read_text(d / "full/iteration_1/model.json");
  CHECK(same_model);
  CHECK(fs::file_size(d / "m/dpo.jsonl") > 0);

  REQUIRE(run("eval" + kSets + " --model " + d / "m/model_1.json" + " --out " + d / "m/eval.json", log) == 0);
  const auto eval = nlohmann::json::parse(scpo::read_text(d / "m/eval.json"));
  CHECK(eval.contains("greedy_acc"));

  REQUIRE(run("build-pairs" + kSets + " --mode semi --problems " + d / "m/problems.jsonl" + " --samples " +
                  d / "m/samples.jsonl" + " --out " + d / "m/semi.jsonl",
              log) == 0);
  const auto semi = scpo::read_pairs(d / "m/semi.jsonl").records;
  REQUIRE_FALSE(semi.empty());
  for (const auto& p : semi) CHECK(p.source == scpo::PairSource::Gold);
}

TEST_CASE("analysis commands write CSV") {
  TempDir d;
  const auto log = d / "log.txt";
  REQUIRE(run("somersd" + kSets + " --ks 2,8 --out " + d / "s.csv", log) == 0);
  CHECK(scpo::read_text(d / "s.csv").starts_with("k,somers_d,problems\n2,"));
  REQUIRE(run("sweep-tau" + kSets + " --taus 0.5k,0.7k --out " + d / "t.csv", log) == 0);
  CHECK(scpo::read_text(d / "t.csv").starts_with("tau,pair_count,margin,test_acc\n0.5k,"));
}

TEST_CASE("errors exit non-zero with the error kind") {
  TempDir d;
  const auto log = d / "log.txt";
  CHECK(run("vote --config default --samples " + d / "missing.jsonl", log) == 1);
  CHECK(scpo::read_text(log).starts_with("IoError:"));
  CHECK(run("run --config default --set k=0 --out " + d / "x", log) == 1);
  CHECK(scpo::read_text(log).starts_with("ValidationError: k:"));
  scpo::write_text_atomic(d / "bad.yaml", "k: [1,\n");
  CHECK(run("run --config " + d / "bad.yaml" + " --out " + d / "x", log) == 1);
  CHECK(scpo::read_text(log).starts_with("ParseError:"));
  CHECK(run("frobnicate", log) == 2);
  CHECK(run("run --config default", log) == 2);
}
