#include "aggrl/prompts.hpp"

#include <stdexcept>

namespace aggrl::prompts {

namespace {

constexpr std::string_view kPointwiseHead =
    "You are given a user question and a response from an AI assistant. Your "
    "task is to act as an impartial judge and evaluate how well the response "
    "fulfills the user's instructions. You will be shown multiple responses "
    "to the same prompt, but only one at a time. Evaluate each response "
    "independently.\n"
    "\n"
    "Think carefully about how to assess the quality of the response and "
    "assign the assistant's response a score 1 if the response is correct, "
    "and 0 if not. Enclose the score within <score> and </score> tags.\n"
    "\n"
    "Format your output like this:\n"
    "<think> your_thinking_process </think>\n"
    "<score> 0 or 1 </score>\n"
    "\n"
    "Below are the user's question and the assistant's response:\n"
    "\n";

constexpr std::string_view kPointwiseRefHead =
    "You are given a user question, a reference answer, and a response from "
    "an AI assistant. Your task is to act as an impartial judge and evaluate "
    "how well the response fulfills the user's instructions. You will be "
    "shown multiple responses to the same prompt, but only one at a time. "
    "Evaluate each response independently.\n"
    "\n"
    "Think carefully about how to assess the quality of the response and "
    "assign the assistant's response a score 1 if the response is correct, "
    "and 0 if not. Enclose the score within <score> and </score> tags.\n"
    "\n"
    "Format your output like this:\n"
    "<think> your_thinking_process </think>\n"
    "<score> 0 or 1 </score>\n"
    "\n"
    "Below are the user's question and the assistant's response:\n"
    "\n";

std::string pointwise_tail(const std::string& response) {
  std::string out = "[The Start of the Assistant's Answer]\n";
  out += response;
  out += "\n[The End of the Assistant's Answer]";
  return out;
}

}  // namespace

std::string render_pointwise(const std::string& instruction,
                             const std::string& response) {
  std::string out(kPointwiseHead);
  out += "[User Question]\n";
  out += instruction;
  out += "\n\n";
  out += pointwise_tail(response);
  return out;
}

std::string render_pointwise_with_reference(const std::string& instruction,
                                            const std::string& reference,
                                            const std::string& response) {
  std::string out(kPointwiseRefHead);
  out += "[User Question]\n";
  out += instruction;
  out += "\n\n[Reference Answer]\n";
  out += reference;
  out += "\n\n";
  out += pointwise_tail(response);
  return out;
}

std::string render_pairwise(const std::string& instruction,
                            const std::string& response_a,
                            const std::string& response_b) {
  std::string out =
      "You are given a user question and two responses from two AI "
      "assistants. Your task is to act as an impartial judge and evaluate "
      "which response better follows the user's instructions and provides a "
      "higher-quality answer. Avoid any position biases and ensure that the "
      "order in which the responses were presented does not influence your "
      "decision. Do not allow the length of the responses to influence your "
      "evaluation. Do not favor certain names of the assistants. Be as "
      "objective as possible.\n"
      "\n"
      "Think carefully about how to assess the quality of the responses and "
      "assign each response a score from 0 to 10, using either an integer or "
      "a decimal with up to 0.1 precision, with a higher score indicating a "
      "higher-quality response that better satisfies the criteria. Enclose "
      "the scores within the tags <score_A> </score_A>, and <score_B> "
      "</score_B>.\n"
      "\n"
      "Format your output like this:\n"
      "<think> your_thinking_process </think>\n"
      "<score_A> your_score_a </score_A> <score_B> your_score_b </score_B>\n"
      "\n"
      "Below are the user's question and the two responses:\n"
      "\n";
  out += "[User Question]\n";
  out += instruction;
  out += "\n\n[The Start of Assistant A's Answer]\n";
  out += response_a;
  out += "\n[The End of Assistant A's Answer]\n";
  out += "\n[The Start of Assistant B's Answer]\n";
  out += response_b;
  out += "\n[The End of Assistant B's Answer]";
  return out;
}

std::string render_listwise(const std::string& instruction,
                            const std::vector<std::string>& responses) {
  if (responses.size() < 3)
    throw std::invalid_argument(
        "listwise template needs at least 3 responses");
  std::string k = std::to_string(responses.size());
  std::string out =
      "You are given a user question and " + k + " responses from " + k +
      " AI assistants. Your task is to act as an impartial judge and "
      "evaluate which responses better follow the user's instructions and "
      "provide higher-quality answers. Avoid any position biases and ensure "
      "that the order in which the responses were presented does not "
      "influence your decision. Do not allow the length of the responses to "
      "influence your evaluation. Do not favor certain names of the "
      "assistants. Be as objective as possible.\n"
      "\n"
      "Think carefully about how to assess the quality of the responses and "
      "assign each response a score from 0 to 10, using either an integer or "
      "a decimal with up to 0.1 precision, with a higher score indicating a "
      "higher-quality response that better satisfies the criteria. Enclose "
      "the score for response i within the tags <score_i> </score_i>, so "
      "<score_1> </score_1> through <score_" + k + "> </score_" + k + ">.\n"
      "\n"
      "Format your output like this:\n"
      "<think> your_thinking_process </think>\n"
      "<score_1> your_score_1 </score_1> ... <score_" + k + "> your_score_" +
      k + " </score_" + k + ">\n"
      "\n"
      "Below are the user's question and the " + k + " responses:\n"
      "\n";
  out += "[User Question]\n";
  out += instruction;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    std::string idx = std::to_string(i + 1);
    out += "\n\n[The Start of Assistant " + idx + "'s Answer]\n";
    out += responses[i];
    out += "\n[The End of Assistant " + idx + "'s Answer]";
  }
  return out;
}

std::string render_equivalence(const std::string& problem,
                               const std::string& reference,
                               const std::string& prediction) {
  std::string out =
      "You are given a problem, a reference answer, and a candidate answer. "
      "Your task is to act as an impartial verifier and judge whether the "
      "candidate answer is equivalent to the reference answer for this "
      "problem. Two answers are equivalent when they denote the same result, "
      "even if they are written differently; differences in notation, "
      "formatting, simplification, or units that preserve the meaning do not "
      "matter. Do not grade the reasoning, only the final answers.\n"
      "\n"
      "Think carefully, then output your verdict as a single line containing "
      "exactly Equivalent or Not Equivalent.\n"
      "\n"
      "[Problem]\n";
  out += problem;
  out += "\n\n[Reference Answer]\n";
  out += reference;
  out += "\n\n[Candidate Answer]\n";
  out += prediction;
  return out;
}

std::string render_aggregation(const std::string& problem,
                               const std::vector<std::string>& candidates) {
  if (candidates.empty())
    throw std::invalid_argument("aggregation prompt needs at least one candidate");
  std::string out(kAggregationHead);
  out += "\n";
  out += problem;
  out += "\n";
  out += kAggregationAttempts;
  out += "\n";
  for (const auto& c : candidates) {
    out += c;
    out += "\n";
  }
  out += kAggregationDivider;
  out +=
      "\nit is possible that any, all, or none of these solutions are "
      "correct or complete. Carefully review the provided solutions, using "
      "them as starting points --- correcting mistakes, filling in gaps, "
      "and/or combining useful ideas --- to produce a final, comprehensive, "
      "and correct solution to the problem.";
  return out;
}

}  // namespace aggrl::prompts
