#include "scpo/consistency.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <regex>
#include <stdexcept>

#include "scpo/error.hpp"
#include "scpo/rng.hpp"

namespace scpo {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<std::string> try_numeric(std::string_view raw) {
  std::string s;
  for (char c : raw) {
    if (is_space(c) || c == ',') continue;
    s.push_back(c);
  }
  if (!s.empty() && s.front() == '+') s.erase(s.begin());
  std::size_t i = 0;
  std::string sign;
  if (i < s.size() && s[i] == '-') {
    sign = "-";
    ++i;
  }
  std::string int_part, frac_part;
  bool seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      (seen_dot ? frac_part : int_part).push_back(c);
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      return std::nullopt;
    }
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();
  if (int_part.empty()) int_part = "0";
  std::string out = sign + int_part;
  if (!frac_part.empty()) out += "." + frac_part;
  return out;
}

// Index one past the brace that closes the one at `open`, honouring JSON
// string literals when `json_strings` is set.
std::optional<std::size_t> match_brace(std::string_view text, std::size_t open,
                                       bool json_strings) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (json_strings && c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

std::string strip_boxed(std::string_view s) {
  static constexpr std::string_view kBoxed = "\\boxed{";
  for (;;) {
    s = trim(s);
    while (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
      s = trim(s.substr(1, s.size() - 2));
    }
    if (s.starts_with(kBoxed)) {
      auto close = match_brace(s, kBoxed.size() - 1, false);
      if (close && *close == s.size()) {
        s = s.substr(kBoxed.size(), s.size() - kBoxed.size() - 1);
        continue;
      }
    }
    return std::string(s);
  }
}

void normalize_json_strings(nlohmann::json& j) {
  if (j.is_string()) {
    j = collapse_whitespace(j.get<std::string>());
  } else if (j.is_structured()) {
    for (auto& v : j) normalize_json_strings(v);
  }
}

}  // namespace

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::HashNumber: return "hash-number";
    case ExtractorKind::Boxed: return "boxed";
    case ExtractorKind::LastLine: return "last-line";
    case ExtractorKind::JsonSolution: return "json-solution";
  }
  return "hash-number";
}

ExtractorKind extractor_from_string(std::string_view name) {
  if (name == "hash-number") return ExtractorKind::HashNumber;
  if (name == "boxed" || name == "boxed-expression") return ExtractorKind::Boxed;
  if (name == "last-line") return ExtractorKind::LastLine;
  if (name == "json-solution") return ExtractorKind::JsonSolution;
  throw ValidationError("unknown extractor kind '" + std::string(name) + "'");
}

std::string canonicalize(std::string_view raw, ExtractorKind kind) {
  if (trim(raw).empty()) throw MalformedAnswer("empty answer");
  switch (kind) {
    case ExtractorKind::HashNumber: {
      auto n = try_numeric(trim(raw));
      if (!n) throw MalformedAnswer("not a number: '" + std::string(raw) + "'");
      return *n;
    }
    case ExtractorKind::Boxed: {
      std::string inner = collapse_whitespace(strip_boxed(raw));
      if (inner.empty()) throw MalformedAnswer("empty boxed expression");
      if (auto n = try_numeric(inner)) return *n;
      return inner;
    }
    case ExtractorKind::LastLine:
      return collapse_whitespace(raw);
    case ExtractorKind::JsonSolution: {
      nlohmann::json j = nlohmann::json::parse(raw, nullptr, false);
      if (j.is_discarded()) throw MalformedAnswer("solution is not valid JSON");
      normalize_json_strings(j);
      return j.dump();  // object keys are already sorted
    }
  }
  throw MalformedAnswer("unknown extractor kind");
}

std::optional<std::string> extract_answer(std::string_view text,
                                          ExtractorKind kind) noexcept {
  try {
    switch (kind) {
      case ExtractorKind::HashNumber: {
        static const std::regex re(
            R"(####[ \t]*\$?[ \t]*([-+]?(?:[0-9][0-9,]*(?:\.[0-9]+)?|\.[0-9]+)))");
        std::optional<std::string> last;
        const std::string s(text);
        for (auto it = std::sregex_iterator(s.begin(), s.end(), re);
             it != std::sregex_iterator(); ++it) {
          last = (*it)[1].str();
        }
        if (!last) return std::nullopt;
        return canonicalize(*last, kind);
      }
      case ExtractorKind::Boxed: {
        static constexpr std::string_view kBoxed = "\\boxed{";
        std::size_t pos = text.rfind(kBoxed);
        while (pos != std::string_view::npos) {
          auto close = match_brace(text, pos + kBoxed.size() - 1, false);
          if (close) {
            auto inner = text.substr(pos + kBoxed.size(),
                                     *close - pos - kBoxed.size() - 1);
            if (!trim(inner).empty()) return canonicalize(inner, kind);
          }
          if (pos == 0) break;
          pos = text.rfind(kBoxed, pos - 1);
        }
        return std::nullopt;
      }
      case ExtractorKind::LastLine: {
        std::size_t end = text.size();
        while (end > 0) {
          std::size_t start = text.rfind('\n', end - 1);
          std::size_t begin = start == std::string_view::npos ? 0 : start + 1;
          auto line = trim(text.substr(begin, end - begin));
          if (!line.empty()) return canonicalize(line, kind);
          if (start == std::string_view::npos) break;
          end = start;
        }
        return std::nullopt;
      }
      case ExtractorKind::JsonSolution: {
        std::size_t pos = text.rfind('{');
        while (pos != std::string_view::npos) {
          if (auto close = match_brace(text, pos, true)) {
            auto j = nlohmann::json::parse(text.substr(pos, *close - pos),
                                           nullptr, false);
            if (!j.is_discarded() && j.is_object() && j.contains("solution")) {
              return canonicalize(j["solution"].dump(), kind);
            }
          }
          if (pos == 0) break;
          pos = text.rfind('{', pos - 1);
        }
        return std::nullopt;
      }
    }
  } catch (...) {
  }
  return std::nullopt;
}

const AnswerCluster* VoteTally::find(std::string_view answer) const {
  for (const auto& c : clusters) {
    if (c.answer == answer) return &c;
  }
  return nullptr;
}

int VoteTally::votes_for(std::string_view answer) const {
  const auto* c = find(answer);
  return c ? c->votes : 0;
}

VoteTally tally_votes(std::span<const ResponseSample> samples,
                      ExtractorKind kind, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("tally_votes: no samples");
  VoteTally tally;
  tally.problem_id = samples.front().problem_id;
  tally.k = static_cast<int>(samples.size());

  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.problem_id != tally.problem_id) {
      throw MixedProblem("samples span problems '" + tally.problem_id +
                         "' and '" + s.problem_id + "'");
    }
    auto answer = extract_answer(s.text, kind);
    if (!answer) {
      ++tally.unparsed_count;
      continue;
    }
    auto it = std::find_if(tally.clusters.begin(), tally.clusters.end(),
                           [&](const AnswerCluster& c) { return c.answer == *answer; });
    if (it == tally.clusters.end()) {
      tally.clusters.push_back({*answer, 1, 0, {}, static_cast<int>(i)});
      members.push_back({i});
    } else {
      ++it->votes;
      members[static_cast<std::size_t>(it - tally.clusters.begin())].push_back(i);
    }
  }

  std::vector<std::size_t> order(tally.clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tally.clusters[a].votes > tally.clusters[b].votes;
  });

  Rng rng(derive_seed(seed, "representative", 0, tally.problem_id));
  std::vector<AnswerCluster> sorted;
  sorted.reserve(order.size());
  for (std::size_t idx : order) {
    AnswerCluster c = tally.clusters[idx];
    const auto& m = members[idx];
    std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
    const auto& rep = samples[m[pick(rng)]];
    c.representative = rep.sample_idx;
    c.representative_text = rep.text;
    sorted.push_back(std::move(c));
  }
  tally.clusters = std::move(sorted);
  return tally;
}

}  // namespace scpo
