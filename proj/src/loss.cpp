#include "scpo/loss.hpp"

namespace scpo {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Scpo: return "scpo";
    case Objective::Unweighted: return "unweighted";
    case Objective::Lmsi: return "lmsi";
  }
  return "scpo";
}

Objective objective_from_string(std::string_view s) {
  if (s == "scpo") return Objective::Scpo;
  if (s == "unweighted") return Objective::Unweighted;
  if (s == "lmsi") return Objective::Lmsi;
  throw ValidationError("objective: expected scpo|unweighted|lmsi, got '" + std::string(s) + "'");
}

}  // namespace scpo
