#include "scpo/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "scpo/error.hpp"

namespace scpo {

using nlohmann::json;

namespace {

template <typename T>
ojson nullable(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

void check_keys(const json& j, std::initializer_list<const char*> keys, int line,
                const char* what) {
  const std::string where = "line " + std::to_string(line) + ": " + what;
  if (!j.is_object()) throw SchemaError(where + " record is not a JSON object");
  std::set<std::string> expected;
  for (const char* k : keys) {
    expected.insert(k);
    if (!j.contains(k)) throw SchemaError(where + " record is missing key '" + k + "'");
  }
  for (const auto& [k, v] : j.items()) {
    if (!expected.count(k)) throw SchemaError(where + " record has unexpected key '" + k + "'");
  }
}

template <typename T>
T field(const json& j, const char* key, int line) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError("line " + std::to_string(line) + ": key '" + key + "' has the wrong type");
  }
}

std::optional<std::string> opt_string(const json& j, const char* key, int line) {
  if (j.at(key).is_null()) return std::nullopt;
  return field<std::string>(j, key, line);
}

template <typename F>
auto enum_field(const json& j, const char* key, int line, F parse) {
  const auto s = field<std::string>(j, key, line);
  try {
    return parse(s);
  } catch (const ValidationError&) {
    throw SchemaError("line " + std::to_string(line) + ": key '" + key + "' has invalid value '" +
                      s + "'");
  }
}

std::optional<ArtifactHeader> header_from_json(const json& j, int line) {
  if (!j.is_object() || !j.contains("header") || j.size() != 1) return std::nullopt;
  const json& h = j["header"];
  check_keys(h, {"kind", "config_hash", "iteration", "seed", "model"}, line, "header");
  ArtifactHeader out;
  out.kind = field<std::string>(h, "kind", line);
  out.config_hash = field<std::string>(h, "config_hash", line);
  out.iteration = field<int>(h, "iteration", line);
  out.seed = field<std::uint64_t>(h, "seed", line);
  out.model = field<std::string>(h, "model", line);
  return out;
}

template <typename T, typename Decode>
Dataset<T> read_jsonl(const std::string& path, Decode decode) {
  const std::string text = read_text(path);
  Dataset<T> out;
  std::size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string_view row(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (row.empty()) throw SchemaError("line " + std::to_string(line) + ": empty record");
    json j;
    try {
      j = json::parse(row);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    if (line == 1) {
      if (auto h = header_from_json(j, line)) {
        out.header = std::move(h);
        continue;
      }
    }
    out.records.push_back(decode(j, line));
  }
  return out;
}

}  // namespace

ojson to_json(const Problem& p) {
  return {{"id", p.id},
          {"text", p.text},
          {"gold_answer", nullable(p.gold_answer)},
          {"split", to_string(p.split)},
          {"origin", to_string(p.origin)}};
}

ojson to_json(const ResponseSample& s) {
  return {{"problem_id", s.problem_id},   {"sample_idx", s.sample_idx},
          {"pool", to_string(s.pool)},    {"temperature", s.temperature},
          {"text", s.text},               {"answer", nullable(s.answer)}};
}

ojson to_json(const PreferencePair& p) {
  return {{"problem_id", p.problem_id},
          {"chosen_text", p.chosen_text},
          {"rejected_text", p.rejected_text},
          {"chosen_answer", p.chosen_answer},
          {"rejected_answer", p.rejected_answer},
          {"chosen_votes", p.chosen_votes},
          {"rejected_votes", p.rejected_votes},
          {"k", p.k},
          {"weight", p.weight},
          {"source", to_string(p.source)},
          {"tau", p.tau},
          {"iteration", p.iteration}};
}

ojson to_json(const ArtifactHeader& h) {
  return {{"header",
           {{"kind", h.kind},
            {"config_hash", h.config_hash},
            {"iteration", h.iteration},
            {"seed", h.seed},
            {"model", h.model}}}};
}

ojson to_json(const VoteTally& t) {
  ojson clusters = ojson::array();
  for (const auto& c : t.clusters) {
    clusters.push_back({{"answer", c.answer},
                        {"votes", c.votes},
                        {"representative", c.representative}});
  }
  return {{"problem_id", t.problem_id},
          {"k", t.k},
          {"top_vote_share", t.top_vote_share()},
          {"unparsed_count", t.unparsed_count},
          {"clusters", clusters}};
}

ojson to_json(const EvalReport& r) {
  return {{"greedy_acc", r.greedy_acc},
          {"sc_acc", r.sc_acc},
          {"sc_k", r.sc_k},
          {"mean_top_vote_share", r.mean_top_vote_share},
          {"somers_d", nullable(r.somers_d)},
          {"margin", nullable(r.margin)},
          {"ordering_counts",
           {{"correct", r.ordering.correct},
            {"incorrect", r.ordering.incorrect},
            {"tie", r.ordering.tie},
            {"neutral", r.ordering.neutral}}},
          {"n_problems", r.n_problems}};
}

Problem problem_from_json(const json& j, int line) {
  check_keys(j, {"id", "text", "gold_answer", "split", "origin"}, line, "problem");
  Problem p;
  p.id = field<std::string>(j, "id", line);
  p.text = field<std::string>(j, "text", line);
  p.gold_answer = opt_string(j, "gold_answer", line);
  p.split = enum_field(j, "split", line, split_from_string);
  p.origin = enum_field(j, "origin", line, origin_from_string);
  if (p.origin == Origin::Generated && p.gold_answer) {
    throw SchemaError("line " + std::to_string(line) + ": generated problem '" + p.id +
                      "' must not carry a gold answer");
  }
  return p;
}

ResponseSample sample_from_json(const json& j, int line) {
  check_keys(j, {"problem_id", "sample_idx", "pool", "temperature", "text", "answer"}, line,
             "sample");
  ResponseSample s;
  s.problem_id = field<std::string>(j, "problem_id", line);
  s.sample_idx = field<int>(j, "sample_idx", line);
  s.pool = enum_field(j, "pool", line, pool_from_string);
  s.temperature = field<double>(j, "temperature", line);
  s.text = field<std::string>(j, "text", line);
  s.answer = opt_string(j, "answer", line);
  return s;
}

PreferencePair pair_from_json(const json& j, int line) {
  check_keys(j,
             {"problem_id", "chosen_text", "rejected_text", "chosen_answer", "rejected_answer",
              "chosen_votes", "rejected_votes", "k", "weight", "source", "tau", "iteration"},
             line, "pair");
  PreferencePair p;
  p.problem_id = field<std::string>(j, "problem_id", line);
  p.chosen_text = field<std::string>(j, "chosen_text", line);
  p.rejected_text = field<std::string>(j, "rejected_text", line);
  p.chosen_answer = field<std::string>(j, "chosen_answer", line);
  p.rejected_answer = field<std::string>(j, "rejected_answer", line);
  p.chosen_votes = field<int>(j, "chosen_votes", line);
  p.rejected_votes = field<int>(j, "rejected_votes", line);
  p.k = field<int>(j, "k", line);
  p.weight = field<double>(j, "weight", line);
  p.source = enum_field(j, "source", line, pair_source_from_string);
  p.tau = field<double>(j, "tau", line);
  p.iteration = field<int>(j, "iteration", line);
  return p;
}

void write_text_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string encode_jsonl(std::span<const ojson> records, const std::optional<ArtifactHeader>& h) {
  std::string out;
  if (h) out += to_json(*h).dump() + "\n";
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

namespace {

template <typename T>
void write_records(const std::string& path, std::span<const T> v,
                   const std::optional<ArtifactHeader>& h) {
  std::vector<ojson> rows;
  rows.reserve(v.size());
  for (const auto& x : v) rows.push_back(to_json(x));
  write_text_atomic(path, encode_jsonl(rows, h));
}

}  // namespace

void write_problems(const std::string& path, std::span<const Problem> v,
                    const std::optional<ArtifactHeader>& h) {
  std::set<std::string> ids;
  for (const auto& p : v) {
    if (!ids.insert(p.id).second) throw ValidationError("duplicate problem id '" + p.id + "'");
  }
  write_records(path, v, h);
}

void write_samples(const std::string& path, std::span<const ResponseSample> v,
                   const std::optional<ArtifactHeader>& h) {
  write_records(path, v, h);
}

void write_pairs(const std::string& path, std::span<const PreferencePair> v,
                 const std::optional<ArtifactHeader>& h) {
  write_records(path, v, h);
}

void write_tallies(const std::string& path, std::span<const VoteTally> v,
                   const std::optional<ArtifactHeader>& h) {
  write_records(path, v, h);
}

Dataset<Problem> read_problems(const std::string& path) {
  auto d = read_jsonl<Problem>(path, problem_from_json);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (!ids.insert(d.records[i].id).second) {
      throw SchemaError("duplicate problem id '" + d.records[i].id + "'");
    }
  }
  return d;
}

Dataset<ResponseSample> read_samples(const std::string& path) {
  return read_jsonl<ResponseSample>(path, sample_from_json);
}

Dataset<PreferencePair> read_pairs(const std::string& path) {
  return read_jsonl<PreferencePair>(path, pair_from_json);
}

ojson to_dpo_json(const PreferencePair& p, const std::string& prompt) {
  return {{"prompt", prompt},
          {"chosen", p.chosen_text},
          {"rejected", p.rejected_text},
          {"weight", p.weight}};
}

void write_dpo(const std::string& path, std::span<const PreferencePair> pairs,
               const std::map<std::string, std::string>& prompts) {
  std::vector<ojson> rows;
  for (const auto& p : pairs) {
    auto it = prompts.find(p.problem_id);
    if (it == prompts.end()) throw ValidationError("no prompt for problem '" + p.problem_id + "'");
    rows.push_back(to_dpo_json(p, it->second));
  }
  write_text_atomic(path, encode_jsonl(rows, std::nullopt));
}

ojson model_to_json(const PolicyModel& m) {
  ojson problems = ojson::array();
  for (Eigen::Index r = 0; r < m.problem_count(); ++r) {
    ojson logits = ojson::array();
    for (Eigen::Index a = 0; a < m.answer_count(); ++a) logits.push_back(m.table()(r, a));
    ojson feats = ojson::array();
    const auto f = m.features(r);
    for (Eigen::Index a = 0; a < f.rows(); ++a) {
      ojson row = ojson::array();
      for (Eigen::Index c = 0; c < f.cols(); ++c) row.push_back(f(a, c));
      feats.push_back(row);
    }
    problems.push_back(
        {{"id", m.id(r)}, {"domain", m.domain(r)}, {"logits", logits}, {"features", feats}});
  }
  ojson head = ojson::array();
  for (Eigen::Index c = 0; c < m.feature_dim(); ++c) head.push_back(m.head()(c));
  return {{"version", m.version()},
          {"answer_count", m.answer_count()},
          {"feature_dim", m.feature_dim()},
          {"head", head},
          {"problems", problems}};
}

PolicyModel model_from_json(const json& j) {
  try {
    const auto a = j.at("answer_count").get<Eigen::Index>();
    const auto d = j.at("feature_dim").get<Eigen::Index>();
    PolicyModel m(a, d);
    m.set_version(j.at("version").get<int>());
    const auto head = j.at("head").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(head.size()) != d) throw SchemaError("model: head size mismatch");
    for (Eigen::Index c = 0; c < d; ++c) m.head()(c) = head[static_cast<std::size_t>(c)];
    for (const auto& p : j.at("problems")) {
      const auto logits = p.at("logits").get<std::vector<double>>();
      const auto feats = p.at("features").get<std::vector<std::vector<double>>>();
      if (static_cast<Eigen::Index>(logits.size()) != a ||
          static_cast<Eigen::Index>(feats.size()) != a) {
        throw SchemaError("model: row size mismatch for '" + p.at("id").get<std::string>() + "'");
      }
      Eigen::VectorXd l = Eigen::Map<const Eigen::VectorXd>(logits.data(), a);
      Eigen::MatrixXd f(a, d);
      for (Eigen::Index r = 0; r < a; ++r) {
        if (static_cast<Eigen::Index>(feats[static_cast<std::size_t>(r)].size()) != d) {
          throw SchemaError("model: feature width mismatch");
        }
        for (Eigen::Index c = 0; c < d; ++c) f(r, c) = feats[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      m.add_problem(p.at("id").get<std::string>(), p.at("domain").get<std::vector<std::string>>(),
                    l, f);
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
}

void write_model(const std::string& path, const PolicyModel& m) {
  write_json(path, model_to_json(m));
}

PolicyModel read_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

void write_json(const std::string& path, const ojson& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

}  // namespace scpo
