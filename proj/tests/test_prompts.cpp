#include <doctest.h>

#include "scpo/error.hpp"
#include "scpo/prompts.hpp"

using namespace scpo;

TEST_CASE("built-in templates") {
  const auto names = prompt_template_names();
  CHECK(names == std::vector<std::string>{"gsm8k-response", "math-response", "zebra-response",
                                          "math-query", "zebra-query"});
  CHECK(prompt_template("gsm8k-response").placeholders() == std::vector<std::string>{"question"});
  CHECK(prompt_template("math-query").placeholders() == std::vector<std::string>{"exemplars"});
  CHECK_THROWS_AS(prompt_template("nope"), ValidationError);
}

TEST_CASE("response prompts carry the answer-format instruction") {
  const Problem p{"x", "How many apples are left?", std::nullopt, Split::Train, Origin::Seed};
  const auto gsm = render_response_prompt("gsm8k-response", p);
  CHECK(gsm ==
        "Prompt: Answer the following question step-by-step. When you are ready, place the final "
        "answer in a new line as #### <number>.\n"
        "Q: How many apples are left?\n"
        "A: Let's think step by step.");
  const auto math = render_response_prompt("math-response", p);
  CHECK(math.find("The final answer is $\\boxed{<your answer>}$") != std::string::npos);
  const auto zebra = render_response_prompt("zebra-response", p);
  CHECK(zebra.find("Puzzle to Solve: How many apples are left?") != std::string::npos);
  CHECK(zebra.find("{{") == std::string::npos);
}

TEST_CASE("query prompts list the exemplars") {
  std::vector<Problem> shots{{"a", "First question?", std::nullopt, Split::Train, Origin::Seed},
                             {"b", "Second question?", std::nullopt, Split::Train, Origin::Seed}};
  const auto q = render_query_prompt("math-query", shots);
  CHECK(q.starts_with("Q: First question?\nQ: Second question?\n"));
  CHECK(q.find("generate ONE solvable math word problem with similar difficulty") != std::string::npos);
  CHECK(q.ends_with("Q: "));
  CHECK(render_query_prompt("math-query", shots) == q);
  CHECK_THROWS_AS(render_query_prompt("math-query", {}), ValidationError);
  CHECK(render_query_prompt("zebra-query", shots).find("First question?") != std::string::npos);
}

TEST_CASE("render reports missing placeholders") {
  PromptTemplate t{"t", "Hello {{name}}, {{other}}"};
  CHECK(t.render({{"name", "a"}, {"other", "b"}}) == "Hello a, b");
  CHECK_THROWS_AS(t.render({{"name", "a"}}), ValidationError);
}

TEST_CASE("parse_generated_query") {
  CHECK(parse_generated_query("  What is 2+2?  ") == "What is 2+2?");
  CHECK(parse_generated_query("Q: Tom has 3 cats.\nA: Let's think") == "Tom has 3 cats.");
  CHECK(parse_generated_query("").empty());
}
