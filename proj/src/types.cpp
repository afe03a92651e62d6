#include "scpo/types.hpp"

#include "scpo/error.hpp"

namespace scpo {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

std::string_view to_string(Origin o) {
  return o == Origin::Seed ? "seed" : "generated";
}

std::string_view to_string(Pool p) {
  return p == Pool::Base ? "base" : "high_temp";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

Origin origin_from_string(std::string_view s) {
  if (s == "seed") return Origin::Seed;
  if (s == "generated") return Origin::Generated;
  throw ValidationError("unknown origin '" + std::string(s) + "'");
}

Pool pool_from_string(std::string_view s) {
  if (s == "base") return Pool::Base;
  if (s == "high_temp") return Pool::HighTemp;
  throw ValidationError("unknown pool '" + std::string(s) + "'");
}

}  // namespace scpo
