#include "aggrl/scaffold.hpp"

#include <stdexcept>

#include "aggrl/common.hpp"
#include "aggrl/prompts.hpp"

namespace aggrl::scaffold {

namespace {

void validate(const ScaffoldConfig& config) {
  if (config.m < 1) throw std::invalid_argument("pool size m must be positive");
  if (config.T < 0) throw std::invalid_argument("round count T must be >= 0");
}

std::optional<std::string> extract_boxed_last(const std::string& text) {
  const std::string marker = "\\boxed{";
  std::optional<std::string> found;
  std::size_t pos = 0;
  while (true) {
    std::size_t m = text.find(marker, pos);
    if (m == std::string::npos) break;
    std::size_t start = m + marker.size();
    // Balanced-brace scan; raw braces only, which covers nested \frac{}{}
    // style content. An unterminated span is skipped.
    int depth = 1;
    std::size_t i = start;
    for (; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      else if (text[i] == '}' && --depth == 0) break;
    }
    if (i < text.size()) found = trim(text.substr(start, i - start));
    pos = start;
  }
  return found;
}

std::optional<std::string> extract_answer_tag(const std::string& text) {
  const std::string open = "<answer>";
  const std::string close = "</answer>";
  std::optional<std::string> found;
  std::size_t pos = 0;
  while (true) {
    std::size_t o = text.find(open, pos);
    if (o == std::string::npos) break;
    pos = o + open.size();
    std::size_t c = text.find(close, pos);
    if (c == std::string::npos) continue;
    found = trim(text.substr(pos, c - pos));
  }
  return found;
}

}  // namespace

std::string pack_aggregation_prompt(const std::string& problem,
                                    const std::vector<std::string>& candidates,
                                    const ScaffoldConfig& config) {
  std::string prompt = prompts::render_aggregation(problem, candidates);
  if (config.max_prompt_chars && prompt.size() > *config.max_prompt_chars)
    throw std::invalid_argument(
        "aggregation prompt is " + std::to_string(prompt.size()) +
        " chars, over the limit of " +
        std::to_string(*config.max_prompt_chars));
  return prompt;
}

CandidatePool initial_pool(backend::Backend& backend,
                           const std::string& problem,
                           const ScaffoldConfig& config) {
  validate(config);
  CandidatePool pool;
  pool.round_index = 0;
  pool.candidates =
      backend.generate({problem, config.initial_params, config.m});
  if (static_cast<int>(pool.candidates.size()) != config.m)
    throw BackendError("backend returned " +
                       std::to_string(pool.candidates.size()) +
                       " completions, wanted " + std::to_string(config.m));
  return pool;
}

CandidatePool aggregation_round(backend::Backend& backend,
                                const std::string& problem,
                                const CandidatePool& pool,
                                const ScaffoldConfig& config) {
  validate(config);
  std::string prompt =
      pack_aggregation_prompt(problem, pool.candidates, config);
  CandidatePool next;
  next.round_index = pool.round_index + 1;
  next.candidates =
      backend.generate({prompt, config.aggregation_params, config.m});
  if (static_cast<int>(next.candidates.size()) != config.m)
    throw BackendError("backend returned " +
                       std::to_string(next.candidates.size()) +
                       " completions, wanted " + std::to_string(config.m));
  return next;
}

ScaffoldTrace run(backend::Backend& backend, const std::string& problem,
                  const ScaffoldConfig& config) {
  validate(config);
  ScaffoldTrace trace;
  trace.problem = problem;
  trace.pools.push_back(initial_pool(backend, problem, config));
  for (int t = 0; t < config.T; ++t)
    trace.pools.push_back(
        aggregation_round(backend, problem, trace.pools.back(), config));
  for (const auto& pool : trace.pools) {
    std::vector<std::optional<std::string>> answers;
    answers.reserve(pool.candidates.size());
    for (const auto& c : pool.candidates)
      answers.push_back(extract_answer(c, config.extraction));
    trace.extracted.push_back(std::move(answers));
  }
  return trace;
}

std::optional<std::string> extract_answer(const std::string& completion,
                                          AnswerExtraction mode) {
  return mode == AnswerExtraction::kBoxedLast
             ? extract_boxed_last(completion)
             : extract_answer_tag(completion);
}

TrainingBatch paragator_training_batch(
    const std::vector<double>& initial_rewards,
    const std::vector<double>& aggregation_rewards, int k) {
  TrainingBatch batch;
  advantage::AdvantageConfig config;
  config.k = k;
  config.normalize_by_std = false;
  batch.candidate_advantages =
      advantage::passk_advantages(initial_rewards, config);
  batch.aggregation_advantages =
      advantage::grpo_advantages(aggregation_rewards, false);
  return batch;
}

}  // namespace aggrl::scaffold
