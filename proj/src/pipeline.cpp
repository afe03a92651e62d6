#include "scpo/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage, int iteration) {
  return derive_seed(cfg.seed, stage, static_cast<std::uint64_t>(iteration));
}

std::vector<Problem> training_view(std::span<const Problem> problems) {
  std::vector<Problem> out(problems.begin(), problems.end());
  for (auto& p : out) {
    if (!usable_gold(p)) p.gold_answer.reset();
  }
  return out;
}

std::vector<Problem> participating(std::span<const Problem> problems, bool transduction) {
  std::vector<Problem> out;
  for (const auto& p : problems) {
    if (scpo::participates(p, transduction)) out.push_back(p);
  }
  return out;
}

std::vector<ResponseSample> sample_stage(SamplingBackend& backend,
                                         std::span<const Problem> problems,
                                         const RunConfig& cfg, int iteration) {
  auto base = backend.sample_batch(problems, cfg.base_spec(stage_seed(cfg, "sample", iteration)),
                                   Pool::Base);
  std::vector<Problem> unanimous;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    std::set<std::string> answers;
    for (const auto& s : base[i]) {
      if (s.answer) answers.insert(*s.answer);
    }
    if (answers.size() <= 1) {
      unanimous.push_back(problems[i]);
      where.push_back(i);
    }
  }
  std::vector<std::vector<ResponseSample>> high(problems.size());
  if (cfg.high_temp_samples > 0 && !unanimous.empty()) {
    auto got = backend.sample_batch(
        unanimous, cfg.high_temp_spec(stage_seed(cfg, "high-temp", iteration)), Pool::HighTemp);
    for (std::size_t j = 0; j < got.size(); ++j) high[where[j]] = std::move(got[j]);
  }
  std::vector<ResponseSample> out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    for (auto& s : base[i]) out.push_back(std::move(s));
    for (auto& s : high[i]) out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, ProblemEvidence> evidence_from_samples(
    std::span<const ResponseSample> samples, const RunConfig& cfg, int iteration) {
  std::map<std::string, ProblemEvidence> out;
  for (const auto& s : samples) {
    auto& ev = out[s.problem_id];
    (s.pool == Pool::Base ? ev.base : ev.high_temp).push_back(s);
  }
  const auto seed = stage_seed(cfg, "tally", iteration);
  for (auto& [id, ev] : out) {
    auto by_idx = [](const ResponseSample& a, const ResponseSample& b) {
      return a.sample_idx < b.sample_idx;
    };
    std::stable_sort(ev.base.begin(), ev.base.end(), by_idx);
    std::stable_sort(ev.high_temp.begin(), ev.high_temp.end(), by_idx);
    if (ev.base.empty()) throw ValidationError("problem '" + id + "' has no base-pool samples");
    ev.base_tally = tally_votes(ev.base, cfg.extractor, seed);
    if (!ev.high_temp.empty()) ev.high_tally = tally_votes(ev.high_temp, cfg.extractor, seed);
  }
  return out;
}

std::vector<VoteTally> base_tallies(const std::map<std::string, ProblemEvidence>& evidence) {
  std::vector<VoteTally> out;
  out.reserve(evidence.size());
  for (const auto& [id, ev] : evidence) out.push_back(ev.base_tally);
  return out;
}

GeneratedQueries generate_stage(SamplingBackend& backend, std::span<const Problem> seed_problems,
                                const RunConfig& cfg, int iteration) {
  GeneratedQueries out;
  if (cfg.gen_queries == 0) return out;
  std::vector<Problem> exemplars;
  for (const auto& p : seed_problems) {
    if (p.origin == Origin::Seed && p.split == Split::Train) exemplars.push_back(p);
  }
  out.drawn = backend.generate_queries(exemplars, std::min<int>(cfg.n_shots, static_cast<int>(exemplars.size())),
                                       cfg.gen_queries,
                                       cfg.base_spec(stage_seed(cfg, "gen-queries", iteration)),
                                       "gen-i" + std::to_string(iteration + 1));
  if (out.drawn.empty()) return out;
  auto samples = backend.sample_batch(
      out.drawn, cfg.base_spec(stage_seed(cfg, "gen-filter", iteration)), Pool::Base);
  const double tau = cfg.gen_filter_tau.resolve(cfg.k);
  const auto tseed = stage_seed(cfg, "gen-filter-tally", iteration);
  for (std::size_t i = 0; i < out.drawn.size(); ++i) {
    if (filter_query(tally_votes(samples[i], cfg.extractor, tseed), tau)) {
      out.kept.push_back(out.drawn[i]);
    }
  }
  return out;
}

PairStage pair_stage(std::span<const Problem> problems,
                     const std::map<std::string, ProblemEvidence>& evidence,
                     const RunConfig& cfg, int iteration,
                     const std::map<std::string, std::string>& truths) {
  const auto view = training_view(problems);
  AssembleOptions opt;
  opt.mode = cfg.mode;
  opt.transduction = cfg.transduction;
  opt.iteration = iteration;
  opt.seed = stage_seed(cfg, "pairs", iteration);
  if (cfg.mode == PairMode::Rm) {
    NoisyRewardModel rm(truths, cfg.rm_sigma, stage_seed(cfg, "reward", iteration));
    opt.reward = [rm](const Problem&, std::span<const ResponseSample> s) { return rm.score_all(s); };
  }
  PairStage out;
  out.pairs = assemble_iteration_pairs(view, evidence, cfg.tau, opt, &out.ties);
  return out;
}

PolicyModel train_stage(const PolicyModel& model, std::span<const PreferencePair> pairs,
                        const RunConfig& cfg, int iteration,
                        std::span<const Problem> dev_problems, TrainLog* log) {
  CheckpointScorer scorer;
  std::vector<Problem> dev(dev_problems.begin(), dev_problems.end());
  if (cfg.select_on_dev && !dev.empty()) {
    scorer = [dev](const PolicyModel& m) { return greedy_accuracy(m, dev); };
  }
  return train_iteration(model, pairs, cfg.loss, cfg.train, stage_seed(cfg, "train", iteration),
                         scorer, log);
}

namespace {

std::vector<Problem> split_of(std::span<const Problem> problems, Split s) {
  std::vector<Problem> out;
  for (const auto& p : problems) {
    if (p.split == s && p.origin == Origin::Seed) out.push_back(p);
  }
  return out;
}

}  // namespace

EvalReport evaluate_synthetic(SyntheticTask& task, const PolicyModel& model,
                              const RunConfig& cfg, int iteration) {
  EvalReport r;
  const auto problems = split_of(task.problems(), cfg.eval_split);
  r.n_problems = static_cast<int>(problems.size());
  r.sc_k = cfg.k;
  if (problems.empty()) return r;

  PolicyModel scratch = model;
  SyntheticBackend backend(task, scratch, cfg.extractor);
  r.greedy_acc = greedy_accuracy(model, problems);
  auto batches =
      backend.sample_batch(problems, cfg.base_spec(stage_seed(cfg, "eval", iteration)), Pool::Base);
  std::map<std::string, std::vector<ResponseSample>> by_problem;
  std::vector<VoteTally> tallies;
  const auto tseed = stage_seed(cfg, "eval-tally", iteration);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    tallies.push_back(tally_votes(batches[i], cfg.extractor, tseed));
    by_problem[problems[i].id] = std::move(batches[i]);
  }
  r.sc_acc = sc_accuracy(problems, by_problem);
  r.mean_top_vote_share = mean_top_vote_share(tallies);
  std::map<std::string, std::string> gold;
  for (const auto& p : problems) gold[p.id] = *p.gold_answer;
  const auto obs = vote_accuracy_observations(tallies, gold);
  if (obs.size() >= 2) r.somers_d = somers_d(obs);
  return r;
}

ArtifactHeader make_header(const RunConfig& cfg, std::string kind, int iteration,
                           std::string model) {
  return ArtifactHeader{std::move(kind), config_hash(cfg), iteration, cfg.seed, std::move(model)};
}

ojson to_json(const IterationReport& r, const RunConfig& cfg, int model_version) {
  ojson quality = nullptr;
  if (r.quality) {
    quality = {{"margin", r.quality->margin},
               {"pair_count", r.quality->pair_count},
               {"ordering_counts",
                {{"correct", r.quality->ordering.correct},
                 {"incorrect", r.quality->ordering.incorrect},
                 {"tie", r.quality->ordering.tie},
                 {"neutral", r.quality->ordering.neutral}}}};
  }
  return {{"iteration", r.iteration},
          {"model_version", model_version},
          {"config_hash", config_hash(cfg)},
          {"mode", to_string(cfg.mode)},
          {"objective", to_string(cfg.loss.objective)},
          {"tau_votes", r.tau_votes},
          {"pair_counts",
           {{"seed", r.seed_pairs},
            {"generated", r.generated_pairs},
            {"total", r.seed_pairs + r.generated_pairs},
            {"ties_dropped", r.ties}}},
          {"generated_queries", {{"drawn", r.generated_drawn}, {"kept", r.generated_kept}}},
          {"train_top_vote_share", r.train_top_vote_share},
          {"pair_quality", quality},
          {"loss_curve", r.log.epoch_loss},
          {"dev_accuracy", r.log.dev_accuracy},
          {"selected_epoch", r.log.selected_epoch},
          {"metrics_before", to_json(r.before)},
          {"metrics_after", to_json(r.after)},
          {"filtering_note", "the same tau schedule and answerability filter apply in every mode"},
          {"config", config_to_json(cfg)}};
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::optional<std::string>& out_dir) {
  cfg.validate();
  if (cfg.backend != BackendKind::Synthetic) {
    throw ValidationError(
        "backend: training runs need the synthetic backend; use sample and build-pairs to export "
        "data from a served model");
  }
  namespace fs = std::filesystem;
  SyntheticTask task(cfg.synthetic);
  PolicyModel model = task.initial_model();
  const std::vector<Problem> problems = task.problems();
  const auto dev = split_of(problems, Split::Dev);
  auto path = [&](const std::string& rel) { return (fs::path(*out_dir) / rel).string(); };

  if (out_dir) {
    write_problems(path("problems.jsonl"), problems, make_header(cfg, "problems", 0, "synthetic"));
    write_model(path("model_0.json"), model);
  }

  PipelineResult result;
  result.evals.push_back(evaluate_synthetic(task, model, cfg, 0));

  for (int t = 0; t < cfg.train.iterations; ++t) {
    IterationReport rep;
    rep.iteration = t;
    rep.before = result.evals.back();
    rep.tau_votes = cfg.tau.at(t).resolve(cfg.k);

    SyntheticBackend backend(task, model, cfg.extractor);
    const auto gen = generate_stage(backend, problems, cfg, t);
    rep.generated_drawn = static_cast<int>(gen.drawn.size());
    rep.generated_kept = static_cast<int>(gen.kept.size());

    auto pool = participating(training_view(problems), cfg.transduction);
    pool.insert(pool.end(), gen.kept.begin(), gen.kept.end());
    const auto samples = sample_stage(backend, pool, cfg, t);
    const auto evidence = evidence_from_samples(samples, cfg, t);

    std::vector<VoteTally> train_tallies;
    for (const auto& p : pool) {
      if (p.origin == Origin::Seed && p.split == Split::Train) {
        train_tallies.push_back(evidence.at(p.id).base_tally);
      }
    }
    rep.train_top_vote_share = mean_top_vote_share(train_tallies);

    const auto ps = pair_stage(pool, evidence, cfg, t, task.truths());
    std::set<std::string> generated_ids;
    for (const auto& p : gen.kept) generated_ids.insert(p.id);
    for (const auto& p : ps.pairs) (generated_ids.count(p.problem_id) ? rep.generated_pairs : rep.seed_pairs)++;
    rep.ties = static_cast<int>(ps.ties.size());
    if (cfg.mode != PairMode::LmsiTargets) {
      rep.quality = pair_quality(ps.pairs, ps.ties, task.truths());
    }

    PolicyModel next = train_stage(model, ps.pairs, cfg, t, dev, &rep.log);
    rep.after = evaluate_synthetic(task, next, cfg, t + 1);

    if (out_dir) {
      const std::string dir = "iteration_" + std::to_string(t + 1) + "/";
      const std::string producer = backend.model_id();
      write_samples(path(dir + "samples.jsonl"), samples, make_header(cfg, "samples", t, producer));
      const auto tallies = base_tallies(evidence);
      write_tallies(path(dir + "tallies.jsonl"), tallies, make_header(cfg, "tallies", t, producer));
      write_problems(path(dir + "generated.jsonl"), gen.kept,
                     make_header(cfg, "generated", t, producer));
      write_pairs(path(dir + "pairs.jsonl"), ps.pairs, make_header(cfg, "pairs", t, producer));
      write_model(path(dir + "model.json"), next);
      write_json(path(dir + "report.json"), to_json(rep, cfg, next.version()));
    }

    model = std::move(next);
    result.evals.push_back(rep.after);
    result.iterations.push_back(std::move(rep));
  }

  if (out_dir) {
    ojson metrics = ojson::array();
    for (const auto& e : result.evals) metrics.push_back(to_json(e));
    write_json(path("summary.json"), {{"config_hash", config_hash(cfg)},
                                      {"iterations", cfg.train.iterations},
                                      {"metrics", metrics},
                                      {"config", config_to_json(cfg)}});
  }
  result.final_model = std::move(model);
  return result;
}

std::vector<TauSweepRow> sweep_tau(const RunConfig& cfg, std::span<const Threshold> taus) {
  std::vector<TauSweepRow> rows;
  for (const auto& tau : taus) {
    RunConfig c = cfg;
    c.tau.values = {tau};
    TauSweepRow row;
    row.tau = tau;
    try {
      const auto res = run_pipeline(c);
      int pairs = 0;
      double margin_sum = 0.0;
      for (const auto& it : res.iterations) {
        pairs += it.seed_pairs + it.generated_pairs;
        if (it.quality) margin_sum += it.quality->margin * it.quality->pair_count;
      }
      row.pair_count = pairs;
      row.margin = pairs ? margin_sum / pairs : 0.0;
      row.test_acc = res.evals.back().greedy_acc;
    } catch (const EmptyDataset&) {
      SyntheticTask task(c.synthetic);
      row.test_acc = evaluate_synthetic(task, task.initial_model(), c, 0).greedy_acc;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string tau_sweep_csv(std::span<const TauSweepRow> rows) {
  std::string out = "tau,pair_count,margin,test_acc\n";
  for (const auto& r : rows) {
    out += r.tau.to_string() + "," + std::to_string(r.pair_count) + "," +
           ojson(r.margin).dump() + "," + ojson(r.test_acc).dump() + "\n";
  }
  return out;
}

std::vector<SomersRow> somers_table(const RunConfig& cfg, std::span<const int> ks) {
  SyntheticTask task(cfg.synthetic);
  const PolicyModel model = task.initial_model();
  std::vector<SomersRow> rows;
  for (int k : ks) {
    RunConfig c = cfg;
    c.k = k;
    c.validate();
    const auto r = evaluate_synthetic(task, model, c, 0);
    SomersRow row;
    row.k = k;
    row.d = r.somers_d;
    row.observations = r.n_problems;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scpo
