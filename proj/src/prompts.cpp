#include "scpo/prompts.hpp"

#include <array>

#include "scpo/error.hpp"

namespace scpo {

namespace {

const std::array<PromptTemplate, 5>& builtins() {
  static const std::array<PromptTemplate, 5> kTemplates{{
      {"gsm8k-response",
       "Prompt: Answer the following question step-by-step. When you are ready, place the "
       "final answer in a new line as #### <number>.\n"
       "Q: {{question}}\n"
       "A: Let's think step by step."},
      {"math-response",
       "Prompt: Answer the following question step-by-step. When you are ready, place the "
       "final answer in a new line as: The final answer is $\\boxed{<your answer>}$\n"
       "Q: {{question}}\n"
       "A: Let's think step by step."},
      {"zebra-response",
       R"(Example Puzzle:

There are 3 houses, numbered 1 to 3 from left to right, as seen from across the street. Each house is occupied by a different person. Each house has a unique attribute for each of the following characteristics:
 - Each person has a unique name: 'Peter', 'Eric', 'Arnold'.
 - Each person has a unique favorite drink: 'tea', 'water', 'milk'

## Clues:
1. Peter is in the second house.
2. Arnold is directly left of the one who only drinks water.
3. The one who only drinks water is directly left of the person who likes milk.

Answer to the Example Puzzle:

{
    "reasoning": "Given Clue 1, we know Peter is in House 2. According to Clue 2, Arnold is directly left of the one who only drinks water. The person in House 3 cannot be on the left of anyone, so Arnold must be in House 1. Thus, Peter drinks water, and Eric lives in House 3. Then, according to Clue 3, Eric drinks milk. Therefore, Arnold drinks tea.",
    "solution": {
        "House 1": {
            "Name": "Arnold",
            "Drink": "tea"
        },
        "House 2": {
            "Name": "Peter",
            "Drink": "water"
        },
        "House 3": {
            "Name": "Eric",
            "Drink": "milk"
        }
    }
}

Puzzle to Solve: {{puzzle}}

Prompt:
Now please solve the above puzzle. Present your reasoning and solution in the following json format:
 {{json_template}})"},
      {"math-query",
       "{{exemplars}}\n"
       "Prompt: Based on the examples above, generate ONE solvable math word problem with "
       "similar difficulty. Note that all the information needed to solve the problem should "
       "be included in the question. Output the question and nothing else.\n"
       "Q: "},
      {"zebra-query",
       R"(Example Puzzle:
Attributes to Change: ["Name", "Drink"]
```
There are 3 houses, numbered 1 to 3 from left to right, as seen from across the street. Each house is occupied by a different person. Each house has a unique attribute for each of the following characteristics:
 - Each person has a unique name: 'Peter', 'Eric', 'Arnold'.
 - Each person has a unique favorite drink: 'tea', 'water', 'milk'

## Clues:
1. Peter is in the second house.
2. Arnold is directly left of the one who only drinks water.
3. The one who only drinks water is directly left of the person who likes milk.
'''

Answer:
Let's change the "Name" and "Drink" attributes of the given puzzle to create a new puzzle. There are 3 names and drinks involved
Mentions of "Name" changes from 'Peter', 'Eric', 'Arnold' to mentions of "Name": 'Molly', 'Shannon', 'Kelly' respectively.
Instead of "Drink" as the attribute, let's their "Food" preferences as the attribute. So mentions of "Drink" changes from 'tea', 'water', 'milk' to mentions of "Food": 'pizza', 'burgers', 'fries`' respectively.
Now, changing the language of the puzzle and clues we get,

New Attribute Map: {"Name": "Name", "Drink": "Food"}
Puzzle:
'''
There are 3 houses, numbered 1 to 3 from left to right, as seen from across the street. Each house is occupied by a different person. Each house has a unique attribute for each of the following characteristics:
 - Each person has a unique name: 'Molly', 'Shannon', 'Kelly'.
 - Each person has a unique favorite food: 'pizza', 'burgers', 'fries'

## Clues:
1. Molly is in the second house.
2. Kelly is directly left of the one who only eats burgers.
3. The one who only eats burgers is directly left of the person who likes fries.
```

Puzzle to rephrase:
Attributes to Change: {{attributes}}
```
{{input_puzzle}}
'''

Prompt:
Rephrase the above puzzle by changing only the attributes above. ALWAYS mention the "New Attribute Map" and enclose the new puzzle within ``` '''. Aside from these attributes keep the logic of the puzzle as similar as possible. Similar to the example above, give your reasoning before rephrasing the puzzle.)"},
  }};
  return kTemplates;
}

constexpr std::string_view kZebraJsonTemplate =
    R"({"reasoning": "___", "solution": {"House 1": {"Name": "___"}}})";

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string key = text.substr(open + 2, close - open - 2);
    auto it = vars.find(key);
    if (it == vars.end()) {
      throw ValidationError("prompt '" + name + "': no value for placeholder '" + key + "'");
    }
    out.append(text, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string::npos) break;
    out.push_back(text.substr(pos + 2, close - pos - 2));
    pos = close + 2;
  }
  return out;
}

const PromptTemplate& prompt_template(std::string_view name) {
  for (const auto& t : builtins()) {
    if (t.name == name) return t;
  }
  throw ValidationError("unknown prompt template '" + std::string(name) + "'");
}

std::vector<std::string> prompt_template_names() {
  std::vector<std::string> out;
  for (const auto& t : builtins()) out.push_back(t.name);
  return out;
}

std::string render_response_prompt(std::string_view template_name, const Problem& problem) {
  const auto& t = prompt_template(template_name);
  return t.render({{"question", problem.text},
                   {"puzzle", problem.text},
                   {"json_template", std::string(kZebraJsonTemplate)}});
}

std::string render_query_prompt(std::string_view template_name,
                                std::span<const Problem> exemplars) {
  if (exemplars.empty()) throw ValidationError("query generation needs at least one exemplar");
  const auto& t = prompt_template(template_name);
  std::string shots;
  for (const auto& p : exemplars) shots += "Q: " + p.text + "\n";
  return t.render({{"exemplars", shots},
                   {"input_puzzle", exemplars.front().text},
                   {"attributes", R"(["Name", "Drink"])"}});
}

std::string parse_generated_query(std::string_view completion) {
  std::string_view s = completion;
  // Models sometimes echo a "Q:" prefix or continue with an answer.
  if (auto q = s.rfind("Q:"); q != std::string_view::npos) s = s.substr(q + 2);
  if (auto a = s.find("\nA:"); a != std::string_view::npos) s = s.substr(0, a);
  return std::string(trim(s));
}

}  // namespace scpo
