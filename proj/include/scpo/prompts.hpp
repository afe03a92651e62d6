#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scpo/types.hpp"

namespace scpo {

/// Placeholders are written `{{name}}`; single braces are literal text.
struct PromptTemplate {
  std::string name;
  std::string text;

  /// Throws ValidationError when a placeholder has no value.
  std::string render(const std::map<std::string, std::string>& vars) const;
  std::vector<std::string> placeholders() const;
};

/// Built-in templates: "gsm8k-response", "math-response", "zebra-response",
/// "math-query" and "zebra-query". Throws ValidationError for other names.
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> prompt_template_names();

std::string render_response_prompt(std::string_view template_name, const Problem& problem);

/// "math-query" lists every exemplar as a "Q:" line; "zebra-query" rephrases
/// the first exemplar.
std::string render_query_prompt(std::string_view template_name,
                                std::span<const Problem> exemplars);

/// Pulls the generated question out of a query-generation completion.
std::string parse_generated_query(std::string_view completion);

}  // namespace scpo
