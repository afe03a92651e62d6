// Command-line front end: every stage of the loop as a subcommand, plus
// `run` for the whole thing.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "scpo/error.hpp"
#include "scpo/http_backend.hpp"
#include "scpo/pipeline.hpp"
#include "scpo/prompts.hpp"

using namespace scpo;
namespace fs = std::filesystem;

namespace {

RunConfig config_from(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty() || path == "default") return parse_config("", overrides);
  return load_config(path, overrides);
}

std::vector<Threshold> parse_taus(const std::string& list) {
  std::vector<Threshold> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Threshold::parse(item));
  if (out.empty()) throw ValidationError("taus: empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ValidationError("ks: cannot parse '" + item + "'");
    }
  }
  return out;
}

// Ground truth of every listed synthetic problem, generated ones included.
std::map<std::string, std::string> synthetic_truths(const RunConfig& cfg,
                                                    std::span<const Problem> problems) {
  std::map<std::string, std::string> out;
  for (const auto& p : problems) {
    out[p.id] = draw_synthetic_problem(cfg.synthetic, p.id, p.split, p.origin).truth;
  }
  return out;
}

std::vector<Problem> load_problem_files(const std::string& problems,
                                        const std::vector<std::string>& extra) {
  auto all = read_problems(problems).records;
  for (const auto& path : extra) {
    auto more = read_problems(path).records;
    all.insert(all.end(), more.begin(), more.end());
  }
  return all;
}

std::string out_or_stdout(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_atomic(path, text);
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vote-weighted preference training on self-sampled answers"};
  app.require_subcommand(1);

  std::string config_path = "default";
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML config file, or 'default'");
    sub->add_option("--set", overrides, "Config override key=value (repeatable, e.g. synthetic.skill=0.6)");
  };

  // init
  std::string init_out;
  auto* init = app.add_subcommand("init", "Write the synthetic problems.jsonl and seed model");
  add_config(init);
  init->add_option("--out", init_out, "Output directory")->required();

  // sample
  std::string sample_problems, sample_model, sample_out;
  std::vector<std::string> sample_extra;
  int sample_iter = 0;
  bool sample_all = false;
  auto* sample = app.add_subcommand("sample", "Sample base and high-temperature pools");
  add_config(sample);
  sample->add_option("--problems", sample_problems)->required();
  sample->add_option("--generated", sample_extra, "Extra problem files (generated queries)");
  sample->add_option("--model", sample_model, "Policy model JSON (synthetic backend)");
  sample->add_option("--iteration", sample_iter);
  sample->add_flag("--all-splits", sample_all, "Sample every problem, not only training ones");
  sample->add_option("--out", sample_out)->required();

  // vote
  std::string vote_samples, vote_out;
  int vote_iter = 0;
  auto* vote = app.add_subcommand("vote", "Tally votes per problem");
  add_config(vote);
  vote->add_option("--samples", vote_samples)->required();
  vote->add_option("--iteration", vote_iter);
  vote->add_option("--out", vote_out);

  // gen-queries
  std::string gq_problems, gq_model, gq_out, gq_model_out;
  int gq_iter = 0;
  auto* genq = app.add_subcommand("gen-queries", "Few-shot query generation plus answerability filter");
  add_config(genq);
  genq->add_option("--problems", gq_problems)->required();
  genq->add_option("--model", gq_model);
  genq->add_option("--model-out", gq_model_out, "Model including rows for the new problems");
  genq->add_option("--iteration", gq_iter);
  genq->add_option("--out", gq_out)->required();

  // build-pairs
  std::string bp_problems, bp_samples, bp_out, bp_dpo, bp_mode;
  std::vector<std::string> bp_extra;
  int bp_iter = 0;
  bool bp_trans = false;
  auto* build = app.add_subcommand("build-pairs", "Turn tallies into preference pairs");
  add_config(build);
  build->add_option("--problems", bp_problems)->required();
  build->add_option("--generated", bp_extra);
  build->add_option("--samples", bp_samples)->required();
  build->add_option("--mode", bp_mode, "unsupervised | semi | gold | rm | lmsi-targets");
  build->add_flag("--transduction", bp_trans);
  build->add_option("--iteration", bp_iter);
  build->add_option("--out", bp_out)->required();
  build->add_option("--dpo-out", bp_dpo, "Also export {prompt, chosen, rejected, weight} rows");

  // train
  std::string tr_model, tr_pairs, tr_out, tr_report, tr_problems;
  int tr_iter = 0;
  auto* train = app.add_subcommand("train", "One training iteration on a pair file");
  add_config(train);
  train->add_option("--model", tr_model)->required();
  train->add_option("--pairs", tr_pairs)->required();
  train->add_option("--problems", tr_problems, "Needed for dev checkpoint selection");
  train->add_option("--iteration", tr_iter);
  train->add_option("--out", tr_out)->required();
  train->add_option("--report", tr_report);

  // run
  std::string run_out;
  auto* run = app.add_subcommand("run", "Full T-iteration pipeline on the synthetic task");
  add_config(run);
  run->add_option("--out", run_out)->required();

  // eval
  std::string ev_model, ev_samples, ev_problems, ev_out;
  int ev_iter = 0;
  auto* eval = app.add_subcommand("eval", "Greedy / SC accuracy, vote share and Somers' D");
  add_config(eval);
  eval->add_option("--model", ev_model, "Synthetic model to evaluate");
  eval->add_option("--samples", ev_samples, "Evaluate stored samples instead (SC only)");
  eval->add_option("--problems", ev_problems, "Problems with gold, used with --samples");
  eval->add_option("--iteration", ev_iter);
  eval->add_option("--out", ev_out);

  // sweep-tau
  std::string sw_taus = "0.1k,0.3k,0.5k,0.7k", sw_out;
  auto* sweep = app.add_subcommand("sweep-tau", "Pair count / margin / accuracy per tau (CSV)");
  add_config(sweep);
  sweep->add_option("--taus", sw_taus);
  sweep->add_option("--out", sw_out);

  // somersd
  std::string sd_ks = "2,4,8,16", sd_out;
  auto* somers = app.add_subcommand("somersd", "Somers' D between votes and accuracy per k (CSV)");
  add_config(somers);
  somers->add_option("--ks", sd_ks);
  somers->add_option("--out", sd_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "UsageError: " << e.what() << "\n";
    return 2;
  }

  try {
    const RunConfig cfg = config_from(config_path, overrides);
    const std::string hash = config_hash(cfg);

    if (*init) {
      SyntheticTask task(cfg.synthetic);
      write_problems((fs::path(init_out) / "problems.jsonl").string(), task.problems(),
                     make_header(cfg, "problems", 0, "synthetic"));
      write_model((fs::path(init_out) / "model.json").string(), task.initial_model());
      std::cout << "problems: " << task.problems().size() << "\n";
    } else if (*sample) {
      auto problems = load_problem_files(sample_problems, sample_extra);
      if (!sample_all) problems = participating(problems, cfg.transduction);
      std::vector<ResponseSample> samples;
      std::string producer;
      if (cfg.backend == BackendKind::Http) {
        HttpBackend backend(cfg.http);
        samples = sample_stage(backend, problems, cfg, sample_iter);
        producer = backend.model_id();
      } else {
        if (sample_model.empty()) throw ValidationError("sample: --model is required for the synthetic backend");
        SyntheticTask task(cfg.synthetic);
        PolicyModel model = read_model(sample_model);
        SyntheticBackend backend(task, model, cfg.extractor);
        samples = sample_stage(backend, problems, cfg, sample_iter);
        producer = backend.model_id();
      }
      write_samples(sample_out, samples, make_header(cfg, "samples", sample_iter, producer));
      std::cout << "samples: " << samples.size() << "\n";
    } else if (*vote) {
      const auto samples = read_samples(vote_samples);
      const auto evidence = evidence_from_samples(samples.records, cfg, vote_iter);
      const auto tallies = base_tallies(evidence);
      int unparsed = 0;
      for (const auto& t : tallies) unparsed += t.unparsed_count;
      if (!vote_out.empty()) {
        write_tallies(vote_out, tallies, make_header(cfg, "tallies", vote_iter,
                                                     samples.header ? samples.header->model : ""));
      }
      std::cout << "problems: " << tallies.size() << "\nmean_top_vote_share: "
                << ojson(mean_top_vote_share(tallies)).dump() << "\nunparsed: " << unparsed
                << "\n";
    } else if (*genq) {
      const auto problems = read_problems(gq_problems).records;
      GeneratedQueries gen;
      std::string producer;
      if (cfg.backend == BackendKind::Http) {
        HttpBackend backend(cfg.http);
        gen = generate_stage(backend, problems, cfg, gq_iter);
        producer = backend.model_id();
      } else {
        if (gq_model.empty()) throw ValidationError("gen-queries: --model is required for the synthetic backend");
        SyntheticTask task(cfg.synthetic);
        PolicyModel model = read_model(gq_model);
        SyntheticBackend backend(task, model, cfg.extractor);
        gen = generate_stage(backend, problems, cfg, gq_iter);
        producer = backend.model_id();
        if (!gq_model_out.empty()) write_model(gq_model_out, model);
      }
      write_problems(gq_out, gen.kept, make_header(cfg, "generated", gq_iter, producer));
      std::cout << "drawn: " << gen.drawn.size() << "\nkept: " << gen.kept.size() << "\n";
    } else if (*build) {
      RunConfig c = cfg;
      if (!bp_mode.empty()) {
        c.mode = pair_mode_from_string(bp_mode);
        if (c.mode == PairMode::LmsiTargets) c.loss.objective = Objective::Lmsi;
      }
      if (bp_trans) c.transduction = true;
      const auto problems = load_problem_files(bp_problems, bp_extra);
      const auto samples = read_samples(bp_samples);
      const auto evidence = evidence_from_samples(samples.records, c, bp_iter);
      std::map<std::string, std::string> truths;
      if (c.mode == PairMode::Rm) truths = synthetic_truths(c, problems);
      const auto ps = pair_stage(problems, evidence, c, bp_iter, truths);
      write_pairs(bp_out, ps.pairs,
                  make_header(c, "pairs", bp_iter, samples.header ? samples.header->model : ""));
      if (!bp_dpo.empty()) {
        std::map<std::string, std::string> prompts;
        for (const auto& p : problems) prompts[p.id] = render_response_prompt(c.http.response_template, p);
        write_dpo(bp_dpo, ps.pairs, prompts);
      }
      std::cout << "pairs: " << ps.pairs.size() << "\nties_dropped: " << ps.ties.size() << "\n";
    } else if (*train) {
      const PolicyModel model = read_model(tr_model);
      const auto pairs = read_pairs(tr_pairs).records;
      std::vector<Problem> dev;
      if (!tr_problems.empty()) {
        for (const auto& p : read_problems(tr_problems).records) {
          if (p.split == Split::Dev && p.gold_answer) dev.push_back(p);
        }
      }
      TrainLog log;
      const PolicyModel next = train_stage(model, pairs, cfg, tr_iter, dev, &log);
      write_model(tr_out, next);
      if (!tr_report.empty()) {
        write_json(tr_report, {{"iteration", tr_iter},
                               {"model_version", next.version()},
                               {"config_hash", hash},
                               {"pair_count", pairs.size()},
                               {"loss_curve", log.epoch_loss},
                               {"dev_accuracy", log.dev_accuracy},
                               {"selected_epoch", log.selected_epoch},
                               {"config", config_to_json(cfg)}});
      }
      std::cout << "model_version: " << next.version() << "\n";
    } else if (*run) {
      const auto res = run_pipeline(cfg, run_out);
      for (std::size_t t = 0; t < res.evals.size(); ++t) {
        const auto& e = res.evals[t];
        std::cout << "M" << t << " greedy_acc=" << ojson(e.greedy_acc).dump()
                  << " sc_acc=" << ojson(e.sc_acc).dump()
                  << " top_vote_share=" << ojson(e.mean_top_vote_share).dump() << "\n";
      }
    } else if (*eval) {
      EvalReport r;
      if (!ev_model.empty()) {
        SyntheticTask task(cfg.synthetic);
        r = evaluate_synthetic(task, read_model(ev_model), cfg, ev_iter);
      } else if (!ev_samples.empty() && !ev_problems.empty()) {
        const auto problems = read_problems(ev_problems).records;
        const auto samples = read_samples(ev_samples).records;
        std::map<std::string, std::vector<ResponseSample>> by;
        for (const auto& s : samples) {
          if (s.pool == Pool::Base) by[s.problem_id].push_back(s);
        }
        std::vector<Problem> evaluated;
        std::vector<VoteTally> tallies;
        std::map<std::string, std::string> gold;
        for (const auto& p : problems) {
          if (!by.count(p.id)) continue;
          evaluated.push_back(p);
          if (!p.gold_answer) throw MissingGold("problem '" + p.id + "' has no gold answer");
          gold[p.id] = *p.gold_answer;
          tallies.push_back(tally_votes(by[p.id], cfg.extractor, stage_seed(cfg, "eval-tally", ev_iter)));
        }
        r.n_problems = static_cast<int>(evaluated.size());
        r.sc_acc = sc_accuracy(evaluated, by);
        r.sc_k = tallies.empty() ? 0 : tallies.front().k;
        r.mean_top_vote_share = mean_top_vote_share(tallies);
        const auto obs = vote_accuracy_observations(tallies, gold);
        if (obs.size() >= 2) r.somers_d = somers_d(obs);
      } else {
        throw ValidationError("eval: pass --model, or --samples with --problems");
      }
      const std::string text = to_json(r).dump(2) + "\n";
      out_or_stdout(ev_out, text);
    } else if (*sweep) {
      const auto taus = parse_taus(sw_taus);
      out_or_stdout(sw_out, tau_sweep_csv(sweep_tau(cfg, taus)));
    } else if (*somers) {
      const auto ks = parse_ints(sd_ks);
      std::string csv = "k,somers_d,problems\n";
      for (const auto& row : somers_table(cfg, ks)) {
        csv += std::to_string(row.k) + "," + (row.d ? ojson(*row.d).dump() : std::string("undefined")) +
               "," + std::to_string(row.observations) + "\n";
      }
      out_or_stdout(sd_out, csv);
    }
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
