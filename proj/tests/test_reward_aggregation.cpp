#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>
#include <string>
#include <vector>

#include "aggrl/common.hpp"
#include "aggrl/prompts.hpp"
#include "aggrl/reward_aggregation.hpp"

using namespace aggrl::reward;
using namespace aggrl::backend;
namespace prompts = aggrl::prompts;

using Script = std::map<std::string, std::vector<std::string>>;

namespace {

std::vector<std::vector<int>> call_indices(const ComparisonPlan& p) {
  std::vector<std::vector<int>> out;
  for (const auto& c : p.calls) out.push_back(c.indices);
  return out;
}

JudgeVerdict verdict(ParsedVerdict parsed) { return {"", std::move(parsed)}; }

}  // namespace

TEST_CASE("call_count anchors at n=8") {
  CHECK(call_count(Pointwise{}, 8).judgments == 8);
  CHECK(call_count(Pointwise{}, 8).wire_calls == 8);
  CHECK(call_count(PairwiseExhaustive{}, 8).judgments == 28);
  CHECK(call_count(PairwiseExhaustive{}, 8).wire_calls == 56);
  CHECK(call_count(PairwisePivot{}, 8).judgments == 7);
  CHECK(call_count(PairwisePivot{}, 8).wire_calls == 14);
  CHECK(call_count(Listwise{3}, 8).judgments == 56);
  CHECK(call_count(Listwise{3}, 8).wire_calls == 56);
}

TEST_CASE("pointwise plan visits every rollout once") {
  ComparisonPlan p = plan(Pointwise{}, 3);
  CHECK(call_indices(p) == std::vector<std::vector<int>>{{0}, {1}, {2}});
}

TEST_CASE("exhaustive plan emits both orders of each pair, adjacent") {
  ComparisonPlan p = plan(PairwiseExhaustive{}, 3);
  CHECK(call_indices(p) == std::vector<std::vector<int>>{
                               {0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}});
}

TEST_CASE("pivot plan pairs everyone with the pivot in both orders") {
  ComparisonPlan p = plan(PairwisePivot{1}, 4);
  CHECK(call_indices(p) == std::vector<std::vector<int>>{
                               {0, 1}, {1, 0}, {2, 1}, {1, 2}, {3, 1}, {1, 3}});
}

TEST_CASE("unset pivot is drawn deterministically from the seed") {
  ComparisonPlan a = plan(PairwisePivot{}, 8, 7);
  ComparisonPlan b = plan(PairwisePivot{}, 8, 7);
  CHECK(call_indices(a) == call_indices(b));
  CHECK(a.calls.size() == 14);

  // the pivot is whichever index appears in every call
  int pivot = a.calls[0].indices[1];
  for (const auto& c : a.calls)
    CHECK((c.indices[0] == pivot || c.indices[1] == pivot));
  CHECK(pivot >= 0);
  CHECK(pivot < 8);

  // some seed must pick a different pivot, otherwise it is not seeded at all
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 64 && !differs; ++seed)
    differs = plan(PairwisePivot{}, 8, seed).calls[0].indices[1] != pivot;
  CHECK(differs);
}

TEST_CASE("listwise plan walks combinations lexicographically") {
  ComparisonPlan p = plan(Listwise{3}, 4);
  CHECK(call_indices(p) == std::vector<std::vector<int>>{
                               {0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
}

TEST_CASE("plan sizes agree with call_count across schemes and n") {
  for (int n = 2; n <= 12; ++n) {
    CHECK(static_cast<std::int64_t>(plan(Pointwise{}, n).calls.size()) ==
          call_count(Pointwise{}, n).wire_calls);
    CHECK(static_cast<std::int64_t>(plan(PairwiseExhaustive{}, n).calls.size()) ==
          call_count(PairwiseExhaustive{}, n).wire_calls);
    CHECK(static_cast<std::int64_t>(plan(PairwisePivot{}, n, n).calls.size()) ==
          call_count(PairwisePivot{}, n).wire_calls);
    if (n >= 3)
      CHECK(static_cast<std::int64_t>(plan(Listwise{3}, n).calls.size()) ==
            call_count(Listwise{3}, n).wire_calls);
  }
}

TEST_CASE("plan arity validation") {
  CHECK_THROWS_AS(plan(Pointwise{}, 0), std::invalid_argument);
  CHECK_THROWS_AS(plan(PairwiseExhaustive{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(plan(PairwisePivot{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(plan(PairwisePivot{5}, 4), std::invalid_argument);
  CHECK_THROWS_AS(plan(PairwisePivot{-1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(plan(Listwise{2}, 4), std::invalid_argument);
  CHECK_THROWS_AS(plan(Listwise{4}, 3), std::invalid_argument);
}

TEST_CASE("execute runs plan calls through the scripted judge in order") {
  std::vector<std::string> rollouts = {"answer one", "answer two"};
  std::string q = "the question";
  std::map<std::string, std::vector<std::string>> table = {
      {prompts::render_pairwise(q, rollouts[0], rollouts[1]),
       {"<score_A> 7 </score_A> <score_B> 3 </score_B>"}},
      {prompts::render_pairwise(q, rollouts[1], rollouts[0]),
       {"<score_A> 4 </score_A> <score_B> 6 </score_B>"}},
  };
  ScriptedBackend judge(table);

  ComparisonPlan p = plan(PairwiseExhaustive{}, 2);
  auto verdicts = execute(p, judge, q, rollouts);
  REQUIRE(verdicts.size() == 2);
  CHECK(std::get<PairScores>(verdicts[0].parsed).a == 7.0);
  CHECK(std::get<PairScores>(verdicts[1].parsed).a == 4.0);

  // fold back: rollout 0 saw 7 (as A) and 6 (as B), rollout 1 saw 3 and 4
  auto rewards = aggregate(p, verdicts);
  REQUIRE(rewards.size() == 2);
  CHECK(rewards[0].mean == doctest::Approx(6.5));
  CHECK(rewards[1].mean == doctest::Approx(3.5));
  CHECK(rewards[0].score_count == 2);
}

TEST_CASE("execute uses the reference-based template when a reference is given") {
  std::vector<std::string> rollouts = {"resp"};
  std::string q = "q";
  ScriptedBackend judge(Script{
      {prompts::render_pointwise_with_reference(q, "the ref", "resp"),
       {"<score> 1 </score>"}},
  });
  ComparisonPlan p = plan(Pointwise{}, 1);
  auto verdicts = execute(p, judge, q, rollouts, std::string("the ref"));
  CHECK(std::get<PointScore>(verdicts[0].parsed).value == 1);

  // without the reference the prompt differs, so the script misses
  CHECK_THROWS_AS(execute(p, judge, q, rollouts), aggrl::BackendError);
}

TEST_CASE("execute validates the rollout count and names failing calls") {
  ComparisonPlan p = plan(Pointwise{}, 2);
  ScriptedBackend empty_judge{std::map<std::string, std::vector<std::string>>{}};
  std::vector<std::string> wrong_size = {"only one"};
  CHECK_THROWS_AS(execute(p, empty_judge, "q", wrong_size),
                  std::invalid_argument);

  std::vector<std::string> rollouts = {"a", "b"};
  try {
    execute(p, empty_judge, "q", rollouts);
    FAIL("expected BackendError");
  } catch (const aggrl::BackendError& e) {
    CHECK(std::string(e.what()).find("judge call 0 failed") !=
          std::string::npos);
  }
}

TEST_CASE("aggregate averages pointwise scores per rollout") {
  ComparisonPlan p = plan(Pointwise{}, 3);
  auto rewards = aggregate(p, {verdict(PointScore{1}), verdict(PointScore{0}),
                               verdict(PointScore{1})});
  CHECK(rewards[0].mean == 1.0);
  CHECK(rewards[1].mean == 0.0);
  CHECK(rewards[2].mean == 1.0);
}

TEST_CASE("aggregate skips parse failures and defaults empty rollouts to 0") {
  ComparisonPlan p = plan(Pointwise{}, 2);
  auto rewards = aggregate(
      p, {verdict(PointScore{1}), verdict(ParseFailure{"no tag"})});
  CHECK(rewards[0].mean == 1.0);
  CHECK(rewards[1].score_count == 0);
  CHECK(rewards[1].mean == 0.0);
}

TEST_CASE("aggregate folds listwise scores positionally") {
  ComparisonPlan p = plan(Listwise{3}, 4);
  REQUIRE(p.calls.size() == 4);
  // score only the first tuple (0,1,2); fail the rest
  std::vector<JudgeVerdict> verdicts = {
      verdict(ListScores{{9.0, 5.0, 1.0}}),
      verdict(ParseFailure{"x"}),
      verdict(ParseFailure{"x"}),
      verdict(ParseFailure{"x"}),
  };
  auto rewards = aggregate(p, verdicts);
  CHECK(rewards[0].mean == 9.0);
  CHECK(rewards[1].mean == 5.0);
  CHECK(rewards[2].mean == 1.0);
  CHECK(rewards[3].score_count == 0);
}

TEST_CASE("aggregate rejects mismatched verdicts") {
  ComparisonPlan p = plan(PairwiseExhaustive{}, 2);
  // wrong count
  CHECK_THROWS_AS(aggregate(p, {verdict(PairScores{1, 2})}),
                  std::invalid_argument);
  // wrong kind for a pairwise call
  CHECK_THROWS_AS(
      aggregate(p, {verdict(PointScore{1}), verdict(PairScores{1, 2})}),
      std::invalid_argument);
  // listwise verdict of the wrong width
  ComparisonPlan lp = plan(Listwise{3}, 3);
  CHECK_THROWS_AS(aggregate(lp, {verdict(ListScores{{1.0, 2.0}})}),
                  std::invalid_argument);
}

TEST_CASE("pivot scheme touches every rollout at least once") {
  ComparisonPlan p = plan(PairwisePivot{}, 6, 123);
  std::set<int> touched;
  for (const auto& c : p.calls)
    for (int i : c.indices) touched.insert(i);
  CHECK(touched.size() == 6);
}
