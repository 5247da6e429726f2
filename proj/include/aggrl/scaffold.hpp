#pragma once

// Generate-then-aggregate scaffold: sample an initial pool of m candidate
// solutions, then repeatedly prompt the model to review the pool and emit m
// aggregated solutions, each round's outputs becoming the next round's pool.
// The trace keeps every pool (T+1 of them for T rounds) plus the answers
// extracted from each candidate, so downstream reward code never has to
// re-generate anything.

#include <optional>
#include <string>
#include <vector>

#include "aggrl/advantage.hpp"
#include "aggrl/backends.hpp"

namespace aggrl::scaffold {

enum class AnswerExtraction {
  kBoxedLast,  // last balanced-brace \boxed{...} span
  kAnswerTag,  // last <answer>...</answer> span
};

struct ScaffoldConfig {
  int m = 4;  // pool size, also the per-round aggregation sample count
  int T = 1;  // aggregation rounds
  backend::SamplingParams initial_params;
  backend::SamplingParams aggregation_params;
  AnswerExtraction extraction = AnswerExtraction::kBoxedLast;
  // Guard against packing an oversized pool into one prompt. Unset = no cap.
  std::optional<std::size_t> max_prompt_chars;
};

struct CandidatePool {
  int round_index = 0;  // 0 = initial generation
  std::vector<std::string> candidates;
};

struct ScaffoldTrace {
  std::string problem;
  std::vector<CandidatePool> pools;  // size T+1
  // extracted[r][i]: answer pulled from pools[r].candidates[i]; nullopt when
  // no extraction pattern matched.
  std::vector<std::vector<std::optional<std::string>>> extracted;
};

// The aggregation prompt for one pool (see prompts::render_aggregation).
// Enforces config.max_prompt_chars: an oversized prompt throws with the
// offending length in the message.
std::string pack_aggregation_prompt(const std::string& problem,
                                    const std::vector<std::string>& candidates,
                                    const ScaffoldConfig& config);

// Round 0: m samples of the problem prompt itself.
CandidatePool initial_pool(backend::Backend& backend,
                           const std::string& problem,
                           const ScaffoldConfig& config);

// One aggregation step: pack the pool, sample m aggregated solutions.
CandidatePool aggregation_round(backend::Backend& backend,
                                const std::string& problem,
                                const CandidatePool& pool,
                                const ScaffoldConfig& config);

// Full run: initial pool + T aggregation rounds + per-candidate extraction.
ScaffoldTrace run(backend::Backend& backend, const std::string& problem,
                  const ScaffoldConfig& config);

// Pulls the final answer out of a completion. Boxed mode finds the last
// \boxed{...} with balanced braces (nested braces allowed); tag mode finds
// the last <answer>...</answer>. The span is whitespace-trimmed.
std::optional<std::string> extract_answer(
    const std::string& completion,
    AnswerExtraction mode = AnswerExtraction::kBoxedLast);

// Joint training signal: pass@k-shaped advantages for the initial pool,
// plain group-centered advantages for the aggregation samples. Both sides
// run unnormalized (no division by sigma).
struct TrainingBatch {
  advantage::AdvantageAssignment candidate_advantages;
  advantage::AdvantageAssignment aggregation_advantages;
};
TrainingBatch paragator_training_batch(
    const std::vector<double>& initial_rewards,
    const std::vector<double>& aggregation_rewards, int k);

}  // namespace aggrl::scaffold
