#pragma once

// Plans LM-as-judge comparisons over a rollout group and folds the verdicts
// back into per-rollout scalar rewards.
//
// Judgment cost varies sharply by scheme, so planning is split from
// execution: a ComparisonPlan is a pure, deterministic description of which
// judge calls to make, and call_count() exposes the cost of a scheme without
// building the plan. Wire calls differ from judgments for the pairwise
// schemes because every pair is judged in both presentation orders to wash
// out position bias.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aggrl/backends.hpp"

namespace aggrl::reward {

struct Pointwise {};
struct PairwiseExhaustive {};
struct PairwisePivot {
  // When unset the pivot is drawn uniformly from the plan seed.
  std::optional<int> pivot_index;
};
struct Listwise {
  int k = 3;  // tuple size; 3 and up (2 is just pairwise)
};
using Scheme = std::variant<Pointwise, PairwiseExhaustive, PairwisePivot,
                            Listwise>;

// One judge invocation over the rollouts named by `indices`:
// size 1 = pointwise, 2 = pairwise (order is presentation order), k = tuple.
struct JudgeCall {
  std::vector<int> indices;
};

struct ComparisonPlan {
  Scheme scheme;
  int n = 0;
  std::vector<JudgeCall> calls;
};

struct CallCount {
  std::int64_t judgments = 0;   // distinct judging decisions
  std::int64_t wire_calls = 0;  // backend invocations (pairwise: 2x)
};

// judgments / wire_calls per scheme over n rollouts:
//   pointwise            n          n
//   pairwise exhaustive  C(n,2)     n(n-1)
//   pairwise pivot       n-1        2(n-1)
//   listwise k           C(n,k)     C(n,k)
CallCount call_count(const Scheme& scheme, int n);

// Deterministic for a fixed (scheme, n, seed). Arity requirements: pointwise
// n >= 1, pairwise n >= 2, listwise n >= k >= 3; violations throw
// std::invalid_argument. Call ordering:
//   pointwise   (0), (1), ...
//   exhaustive  (i,j) then (j,i) for each i < j in row-major order
//   pivot       (a, pivot), (pivot, a) for each a != pivot ascending
//   listwise    ascending-index combinations in lexicographic order
ComparisonPlan plan(const Scheme& scheme, int n, std::uint64_t seed = 0);

// Runs every call through the matching judge helper, in plan order. The
// reference (when present) only affects pointwise calls. A backend failure
// is rethrown with the failing call index prepended.
std::vector<backend::JudgeVerdict> execute(
    const ComparisonPlan& plan, backend::Backend& judge,
    const std::string& instruction, const std::vector<std::string>& rollouts,
    const std::optional<std::string>& reference = {},
    const backend::SamplingParams& params = {},
    const backend::ParseOptions& parse_options = {});

struct RolloutReward {
  double score_sum = 0.0;
  int score_count = 0;
  double mean = 0.0;  // 0 when no valid score accrued
};

// Folds verdicts back onto rollouts: a pointwise verdict accrues to its
// rollout, a pairwise verdict accrues score_A to the first index and score_B
// to the second, a listwise verdict accrues score_i to its i-th index.
// ParseFailure verdicts accrue nothing. verdicts.size() must equal
// plan.calls.size(), and each verdict's kind must match its call's arity.
std::vector<RolloutReward> aggregate(
    const ComparisonPlan& plan,
    const std::vector<backend::JudgeVerdict>& verdicts);

}  // namespace aggrl::reward
