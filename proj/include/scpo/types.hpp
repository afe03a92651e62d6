#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scpo {

enum class Split { Train, Dev, Test };
enum class Origin { Seed, Generated };
enum class Pool { Base, HighTemp };

std::string_view to_string(Split s);
std::string_view to_string(Origin o);
std::string_view to_string(Pool p);

Split split_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);
Pool pool_from_string(std::string_view s);

struct Problem {
  std::string id;
  std::string text;
  std::optional<std::string> gold_answer;
  Split split = Split::Train;
  Origin origin = Origin::Seed;

  bool operator==(const Problem&) const = default;
};

struct ResponseSample {
  std::string problem_id;
  int sample_idx = 0;
  double temperature = 0.7;
  std::string text;
  std::optional<std::string> answer;
  Pool pool = Pool::Base;
  // Not persisted; set when the server stopped on the token limit.
  bool truncated = false;

  bool operator==(const ResponseSample& o) const {
    return problem_id == o.problem_id && sample_idx == o.sample_idx &&
           temperature == o.temperature && text == o.text &&
           answer == o.answer && pool == o.pool;
  }
};

}  // namespace scpo
