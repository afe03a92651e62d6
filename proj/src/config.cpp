#include "scpo/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

std::string_view to_string(BackendKind b) { return b == BackendKind::Http ? "http" : "synthetic"; }

BackendKind backend_from_string(std::string_view s) {
  if (s == "synthetic") return BackendKind::Synthetic;
  if (s == "http") return BackendKind::Http;
  throw ValidationError("backend: expected synthetic|http, got '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw ValidationError(std::string(key) + ": " + why);
  };
  if (k <= 0) fail("k", "must be positive");
  if (!(temperature > 0.0)) fail("temperature", "must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) fail("top_p", "must be in (0,1]");
  if (!(high_temperature > 0.0)) fail("high_temperature", "must be > 0");
  if (high_temp_samples < 0) fail("high_temp_samples", "must be >= 0");
  if (max_tokens <= 0) fail("max_tokens", "must be positive");
  if (tau.values.empty()) fail("tau", "needs at least one value");
  if (!(loss.beta > 0.0)) fail("beta", "must be > 0");
  if (!(loss.alpha >= 0.0)) fail("alpha", "must be >= 0");
  if (train.epochs < 0) fail("epochs", "must be >= 0");
  if (train.batch_size <= 0) fail("batch_size", "must be positive");
  if (train.iterations < 0) fail("iterations", "must be >= 0");
  if (!(train.learning_rate > 0.0)) fail("lr", "must be > 0");
  if (gen_queries < 0) fail("gen_queries", "must be >= 0");
  if (n_shots <= 0) fail("n_shots", "must be positive");
  if (!(rm_sigma >= 0.0)) fail("rm_sigma", "must be >= 0");
  if (mode == PairMode::LmsiTargets && loss.objective != Objective::Lmsi) {
    fail("objective", "mode lmsi requires objective lmsi");
  }
  if (loss.objective == Objective::Lmsi && mode != PairMode::LmsiTargets) {
    fail("objective", "objective lmsi requires mode lmsi");
  }
  synthetic.validate();
  http.validate();
}

SamplingSpec RunConfig::base_spec(std::uint64_t seed_value) const {
  return SamplingSpec{k, temperature, top_p, max_tokens, seed_value};
}

SamplingSpec RunConfig::high_temp_spec(std::uint64_t seed_value) const {
  return SamplingSpec{high_temp_samples, high_temperature, top_p, max_tokens, seed_value};
}

namespace {

template <typename T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError(key + ": invalid value '" + YAML::Dump(node) + "'");
  }
}

Threshold as_threshold(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ValidationError(key + ": expected a scalar like 0.5k or 2");
  try {
    return Threshold::parse(node.Scalar());
  } catch (const ValidationError& e) {
    throw ValidationError(key + ": " + e.what());
  }
}

template <typename E, typename F>
E as_enum(const YAML::Node& node, const std::string& key, F from_string) {
  try {
    return from_string(as<std::string>(node, key));
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    throw ValidationError(msg.rfind(key, 0) == 0 ? msg : key + ": " + msg);
  }
}

using Setter = std::function<void(const YAML::Node&)>;

void apply_section(const YAML::Node& node, const std::string& prefix,
                   const std::map<std::string, Setter>& setters) {
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ValidationError((prefix.empty() ? "config" : prefix) + ": expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError(prefix + key + ": unknown key");
    it->second(kv.second);
  }
}

}  // namespace

namespace {

YAML::Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

RunConfig config_from_node(const YAML::Node& root);

}  // namespace

RunConfig parse_config(std::string_view yaml_text) { return config_from_node(load_yaml(yaml_text)); }

RunConfig parse_config(std::string_view yaml_text, std::span<const std::string> overrides) {
  YAML::Node root = load_yaml(yaml_text);
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ValidationError("config: expected a mapping");
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override '" + o + "': expected key=value");
    }
    const std::string key = o.substr(0, eq);
    YAML::Node value;
    try {
      value = YAML::Load(o.substr(eq + 1));
    } catch (const YAML::ParserException& e) {
      throw ValidationError(key + ": cannot parse override value: " + e.msg);
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      root[key] = value;
    } else {
      const std::string section = key.substr(0, dot);
      if (!root[section] || root[section].IsNull()) root[section] = YAML::Node(YAML::NodeType::Map);
      YAML::Node sub = root[section];
      sub[key.substr(dot + 1)] = value;
    }
  }
  return config_from_node(root);
}

namespace {

RunConfig config_from_node(const YAML::Node& root) {

  RunConfig c;
  auto& s = c.synthetic;
  auto& h = c.http;
  const std::map<std::string, Setter> synthetic_keys{
      {"n_problems", [&](auto& n) { s.n_problems = as<int>(n, "synthetic.n_problems"); }},
      {"n_dev", [&](auto& n) { s.n_dev = as<int>(n, "synthetic.n_dev"); }},
      {"n_test", [&](auto& n) { s.n_test = as<int>(n, "synthetic.n_test"); }},
      {"answer_domain", [&](auto& n) { s.answer_domain = as<int>(n, "synthetic.answer_domain"); }},
      {"skill", [&](auto& n) { s.skill = as<double>(n, "synthetic.skill"); }},
      {"noise_spread", [&](auto& n) { s.noise_spread = as<double>(n, "synthetic.noise_spread"); }},
      {"rng_seed", [&](auto& n) { s.rng_seed = as<std::uint64_t>(n, "synthetic.rng_seed"); }},
      {"prefix_trap_fraction",
       [&](auto& n) { s.prefix_trap_fraction = as<double>(n, "synthetic.prefix_trap_fraction"); }},
      {"contested_fraction",
       [&](auto& n) { s.contested_fraction = as<double>(n, "synthetic.contested_fraction"); }},
      {"contested_true_mass",
       [&](auto& n) { s.contested_true_mass = as<double>(n, "synthetic.contested_true_mass"); }},
      {"contested_gap", [&](auto& n) { s.contested_gap = as<double>(n, "synthetic.contested_gap"); }},
      {"feature_dim", [&](auto& n) { s.feature_dim = as<int>(n, "synthetic.feature_dim"); }},
      {"feature_signal", [&](auto& n) { s.feature_signal = as<double>(n, "synthetic.feature_signal"); }},
      {"misconception_signal",
       [&](auto& n) { s.misconception_signal = as<double>(n, "synthetic.misconception_signal"); }},
      {"feature_noise", [&](auto& n) { s.feature_noise = as<double>(n, "synthetic.feature_noise"); }},
      {"answer_span", [&](auto& n) { s.answer_span = as<int>(n, "synthetic.answer_span"); }},
      {"answer_level_top_p",
       [&](auto& n) { s.answer_level_top_p = as<bool>(n, "synthetic.answer_level_top_p"); }},
  };
  const std::map<std::string, Setter> http_keys{
      {"base_url", [&](auto& n) { h.base_url = as<std::string>(n, "http.base_url"); }},
      {"model", [&](auto& n) { h.model = as<std::string>(n, "http.model"); }},
      {"api_key_env", [&](auto& n) { h.api_key_env = as<std::string>(n, "http.api_key_env"); }},
      {"max_attempts", [&](auto& n) { h.max_attempts = as<int>(n, "http.max_attempts"); }},
      {"backoff_ms", [&](auto& n) { h.backoff_ms = as<int>(n, "http.backoff_ms"); }},
      {"timeout_s", [&](auto& n) { h.timeout_s = as<int>(n, "http.timeout_s"); }},
      {"response_template",
       [&](auto& n) { h.response_template = as<std::string>(n, "http.response_template"); }},
      {"query_template", [&](auto& n) { h.query_template = as<std::string>(n, "http.query_template"); }},
  };
  const std::map<std::string, Setter> top{
      {"k", [&](auto& n) { c.k = as<int>(n, "k"); }},
      {"temperature", [&](auto& n) { c.temperature = as<double>(n, "temperature"); }},
      {"top_p", [&](auto& n) { c.top_p = as<double>(n, "top_p"); }},
      {"high_temperature", [&](auto& n) { c.high_temperature = as<double>(n, "high_temperature"); }},
      {"high_temp_samples", [&](auto& n) { c.high_temp_samples = as<int>(n, "high_temp_samples"); }},
      {"max_tokens", [&](auto& n) { c.max_tokens = as<int>(n, "max_tokens"); }},
      {"tau",
       [&](auto& n) {
         c.tau.values.clear();
         if (n.IsSequence()) {
           for (std::size_t i = 0; i < n.size(); ++i) {
             c.tau.values.push_back(as_threshold(n[i], "tau[" + std::to_string(i) + "]"));
           }
         } else {
           c.tau.values.push_back(as_threshold(n, "tau"));
         }
       }},
      {"beta", [&](auto& n) { c.loss.beta = as<double>(n, "beta"); }},
      {"alpha", [&](auto& n) { c.loss.alpha = as<double>(n, "alpha"); }},
      {"objective",
       [&](auto& n) { c.loss.objective = as_enum<Objective>(n, "objective", objective_from_string); }},
      {"lr", [&](auto& n) { c.train.learning_rate = as<double>(n, "lr"); }},
      {"schedule",
       [&](auto& n) { c.train.schedule = as_enum<Schedule>(n, "schedule", schedule_from_string); }},
      {"epochs", [&](auto& n) { c.train.epochs = as<int>(n, "epochs"); }},
      {"batch_size", [&](auto& n) { c.train.batch_size = as<int>(n, "batch_size"); }},
      {"iterations", [&](auto& n) { c.train.iterations = as<int>(n, "iterations"); }},
      {"select_on_dev", [&](auto& n) { c.select_on_dev = as<bool>(n, "select_on_dev"); }},
      {"seed", [&](auto& n) { c.seed = as<std::uint64_t>(n, "seed"); }},
      {"extractor",
       [&](auto& n) { c.extractor = as_enum<ExtractorKind>(n, "extractor", extractor_from_string); }},
      {"mode", [&](auto& n) { c.mode = as_enum<PairMode>(n, "mode", pair_mode_from_string); }},
      {"transduction", [&](auto& n) { c.transduction = as<bool>(n, "transduction"); }},
      {"gen_queries", [&](auto& n) { c.gen_queries = as<int>(n, "gen_queries"); }},
      {"n_shots", [&](auto& n) { c.n_shots = as<int>(n, "n_shots"); }},
      {"gen_filter_tau", [&](auto& n) { c.gen_filter_tau = as_threshold(n, "gen_filter_tau"); }},
      {"rm_sigma", [&](auto& n) { c.rm_sigma = as<double>(n, "rm_sigma"); }},
      {"eval_split",
       [&](auto& n) { c.eval_split = as_enum<Split>(n, "eval_split", split_from_string); }},
      {"backend", [&](auto& n) { c.backend = as_enum<BackendKind>(n, "backend", backend_from_string); }},
      {"concurrency", [&](auto& n) { h.concurrency = as<int>(n, "concurrency"); }},
      {"http", [&](auto& n) { apply_section(n, "http.", http_keys); }},
      {"synthetic", [&](auto& n) { apply_section(n, "synthetic.", synthetic_keys); }},
  };
  apply_section(root, "", top);
  if (c.mode == PairMode::LmsiTargets && !root["objective"]) c.loss.objective = Objective::Lmsi;
  c.validate();
  return c;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

RunConfig load_config(const std::string& path, std::span<const std::string> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json tau = nlohmann::ordered_json::array();
  for (const auto& t : c.tau.values) tau.push_back(t.to_string());
  const auto& s = c.synthetic;
  const auto& h = c.http;
  return {
      {"k", c.k},
      {"temperature", c.temperature},
      {"top_p", c.top_p},
      {"high_temperature", c.high_temperature},
      {"high_temp_samples", c.high_temp_samples},
      {"max_tokens", c.max_tokens},
      {"tau", tau},
      {"beta", c.loss.beta},
      {"alpha", c.loss.alpha},
      {"objective", to_string(c.loss.objective)},
      {"lr", c.train.learning_rate},
      {"schedule", to_string(c.train.schedule)},
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"iterations", c.train.iterations},
      {"select_on_dev", c.select_on_dev},
      {"seed", c.seed},
      {"extractor", to_string(c.extractor)},
      {"mode", to_string(c.mode)},
      {"transduction", c.transduction},
      {"gen_queries", c.gen_queries},
      {"n_shots", c.n_shots},
      {"gen_filter_tau", c.gen_filter_tau.to_string()},
      {"rm_sigma", c.rm_sigma},
      {"eval_split", to_string(c.eval_split)},
      {"backend", to_string(c.backend)},
      {"concurrency", h.concurrency},
      {"http",
       {{"base_url", h.base_url},
        {"model", h.model},
        {"api_key_env", h.api_key_env},
        {"max_attempts", h.max_attempts},
        {"backoff_ms", h.backoff_ms},
        {"timeout_s", h.timeout_s},
        {"response_template", h.response_template},
        {"query_template", h.query_template}}},
      {"synthetic",
       {{"n_problems", s.n_problems},
        {"n_dev", s.n_dev},
        {"n_test", s.n_test},
        {"answer_domain", s.answer_domain},
        {"skill", s.skill},
        {"noise_spread", s.noise_spread},
        {"rng_seed", s.rng_seed},
        {"prefix_trap_fraction", s.prefix_trap_fraction},
        {"contested_fraction", s.contested_fraction},
        {"contested_true_mass", s.contested_true_mass},
        {"contested_gap", s.contested_gap},
        {"feature_dim", s.feature_dim},
        {"feature_signal", s.feature_signal},
        {"misconception_signal", s.misconception_signal},
        {"feature_noise", s.feature_noise},
        {"answer_span", s.answer_span},
        {"answer_level_top_p", s.answer_level_top_p}}},
  };
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
  return buf;
}

}  // namespace scpo
