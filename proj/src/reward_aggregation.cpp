#include "aggrl/reward_aggregation.hpp"

#include <random>
#include <stdexcept>

#include "aggrl/common.hpp"

namespace aggrl::reward {

namespace {

std::int64_t choose(std::int64_t n, std::int64_t r) {
  if (r < 0 || r > n) return 0;
  if (r > n - r) r = n - r;
  std::int64_t acc = 1;
  for (std::int64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    // n <= a few thousand rollouts in practice; no overflow guard needed
    // beyond picking the smaller r above.
  }
  return acc;
}

void emit_combinations(int n, int k, std::vector<JudgeCall>* out) {
  std::vector<int> combo(k);
  for (int i = 0; i < k; ++i) combo[i] = i;
  while (true) {
    out->push_back({combo});
    int slot = k - 1;
    while (slot >= 0 && combo[slot] == n - k + slot) --slot;
    if (slot < 0) break;
    ++combo[slot];
    for (int j = slot + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
}

}  // namespace

CallCount call_count(const Scheme& scheme, int n) {
  CallCount c;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Pointwise>) {
          c = {n, n};
        } else if constexpr (std::is_same_v<T, PairwiseExhaustive>) {
          c = {choose(n, 2), static_cast<std::int64_t>(n) * (n - 1)};
        } else if constexpr (std::is_same_v<T, PairwisePivot>) {
          c = {n - 1, 2 * static_cast<std::int64_t>(n - 1)};
        } else {
          c = {choose(n, s.k), choose(n, s.k)};
        }
      },
      scheme);
  return c;
}

ComparisonPlan plan(const Scheme& scheme, int n, std::uint64_t seed) {
  ComparisonPlan p;
  p.scheme = scheme;
  p.n = n;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Pointwise>) {
          if (n < 1) throw std::invalid_argument("pointwise needs n >= 1");
          for (int i = 0; i < n; ++i) p.calls.push_back({{i}});
        } else if constexpr (std::is_same_v<T, PairwiseExhaustive>) {
          if (n < 2) throw std::invalid_argument("pairwise needs n >= 2");
          for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
              p.calls.push_back({{i, j}});
              p.calls.push_back({{j, i}});
            }
          }
        } else if constexpr (std::is_same_v<T, PairwisePivot>) {
          if (n < 2) throw std::invalid_argument("pairwise needs n >= 2");
          int pivot;
          if (s.pivot_index) {
            pivot = *s.pivot_index;
            if (pivot < 0 || pivot >= n)
              throw std::invalid_argument("pivot_index out of range");
          } else {
            std::mt19937_64 rng(seed);
            pivot = static_cast<int>(bounded_index(rng(), n));
          }
          for (int a = 0; a < n; ++a) {
            if (a == pivot) continue;
            p.calls.push_back({{a, pivot}});
            p.calls.push_back({{pivot, a}});
          }
        } else {
          if (s.k < 3)
            throw std::invalid_argument("listwise needs k >= 3");
          if (n < s.k)
            throw std::invalid_argument("listwise needs n >= k");
          emit_combinations(n, s.k, &p.calls);
        }
      },
      scheme);
  return p;
}

std::vector<backend::JudgeVerdict> execute(
    const ComparisonPlan& plan, backend::Backend& judge,
    const std::string& instruction, const std::vector<std::string>& rollouts,
    const std::optional<std::string>& reference,
    const backend::SamplingParams& params,
    const backend::ParseOptions& parse_options) {
  if (static_cast<int>(rollouts.size()) != plan.n)
    throw std::invalid_argument("plan built for " + std::to_string(plan.n) +
                                " rollouts, got " +
                                std::to_string(rollouts.size()));
  std::vector<backend::JudgeVerdict> verdicts;
  verdicts.reserve(plan.calls.size());
  for (std::size_t c = 0; c < plan.calls.size(); ++c) {
    const auto& idx = plan.calls[c].indices;
    try {
      if (idx.size() == 1) {
        verdicts.push_back(backend::judge_pointwise(
            judge, instruction, rollouts[idx[0]], reference, params,
            parse_options));
      } else if (idx.size() == 2) {
        verdicts.push_back(backend::judge_pairwise(
            judge, instruction, rollouts[idx[0]], rollouts[idx[1]], params,
            parse_options));
      } else {
        std::vector<std::string> tuple;
        for (int i : idx) tuple.push_back(rollouts[i]);
        verdicts.push_back(backend::judge_listwise(judge, instruction, tuple,
                                                   params, parse_options));
      }
    } catch (const BackendError& e) {
      throw BackendError("judge call " + std::to_string(c) + " failed: " +
                         e.what());
    }
  }
  return verdicts;
}

std::vector<RolloutReward> aggregate(
    const ComparisonPlan& plan,
    const std::vector<backend::JudgeVerdict>& verdicts) {
  if (verdicts.size() != plan.calls.size())
    throw std::invalid_argument("verdict count does not match plan");
  std::vector<RolloutReward> rewards(plan.n);
  auto accrue = [&](int rollout, double score) {
    rewards[rollout].score_sum += score;
    rewards[rollout].score_count += 1;
  };
  for (std::size_t c = 0; c < plan.calls.size(); ++c) {
    const auto& idx = plan.calls[c].indices;
    const auto& parsed = verdicts[c].parsed;
    if (std::holds_alternative<backend::ParseFailure>(parsed)) continue;
    if (idx.size() == 1) {
      const auto* point = std::get_if<backend::PointScore>(&parsed);
      if (!point)
        throw std::invalid_argument("call " + std::to_string(c) +
                                    " expects a point score verdict");
      accrue(idx[0], point->value);
    } else if (idx.size() == 2) {
      const auto* pair = std::get_if<backend::PairScores>(&parsed);
      if (!pair)
        throw std::invalid_argument("call " + std::to_string(c) +
                                    " expects a pairwise verdict");
      accrue(idx[0], pair->a);
      accrue(idx[1], pair->b);
    } else {
      const auto* list = std::get_if<backend::ListScores>(&parsed);
      if (!list || list->values.size() != idx.size())
        throw std::invalid_argument("call " + std::to_string(c) +
                                    " expects a matching listwise verdict");
      for (std::size_t i = 0; i < idx.size(); ++i)
        accrue(idx[i], list->values[i]);
    }
  }
  for (auto& r : rewards)
    r.mean = r.score_count > 0 ? r.score_sum / r.score_count : 0.0;
  return rewards;
}

}  // namespace aggrl::reward
