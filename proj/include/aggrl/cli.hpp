#pragma once

// Command implementations behind the aggrl binary. Each run_* function takes
// its knobs from RunConfig and talks to streams, so tests can drive commands
// without spawning a process. The binary in tools/ only parses flags, opens
// files, and dispatches here.
//
// I/O is JSONL: one JSON object in, one out, in input order. Every output
// object carries "v": 1. A malformed or failing line yields an error record
// ({"v": 1, "line": N, "error": ...}) in its slot instead of killing the
// run; the exit code reports the degradation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace aggrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 2;    // some input lines failed
inline constexpr int kExitUsage = 64;     // bad flags / arity
inline constexpr int kExitTransport = 70; // remote retries exhausted

struct RunConfig {
  // backend selection, shared by all commands that call a model
  std::string backend = "exact";  // exact | scripted | echo | remote
  std::string script_path;        // scripted: JSON table path
  std::string endpoint;           // remote: base URL incl. /v1 prefix
  std::string model;              // remote: model name
  int max_in_flight = 4;
  int retry_base_ms = 1000;  // remote backoff base; tests shrink it
  std::uint64_t seed = 0;
  bool strict_scores = false;  // reject off-grid judge scores instead of rounding

  // vote
  double tau = 0.6;
  double theta = 0.625;

  // advantages
  std::string mode = "grpo";  // grpo | passk
  int k = 1;
  bool normalize = false;
  double sigma_epsilon = 1e-6;

  // plan
  std::string scheme = "pointwise";  // pointwise | exhaustive | pivot | listwise
  int n = 0;
  int list_k = 3;
  std::optional<int> pivot_index;

  // scaffold
  int m = 4;
  int rounds = 1;  // aggregation rounds T
  double initial_temperature = 1.0;
  double aggregation_temperature = 1.0;
  double top_p = 1.0;
  int top_k = -1;  // -1 = disabled
  int max_tokens = 4096;
  std::string extraction = "boxed";  // boxed | answer-tag
  std::string verifier = "exact";    // correctness oracle for scaffold metrics
  int trials = 1000;                 // majority@k trials when m > 12
  std::optional<long long> max_prompt_chars;
};

// vote: {id, problem?, predictions: [...]} ->
//       {v, id, status, answer?, count, groups}
int run_vote(const RunConfig& config, std::istream& in, std::ostream& out,
             std::ostream& err);

// advantages: {id, rewards: [...]} ->
//             {v, id, mode, k?, advantages, mu, sigma, offset?}
int run_advantages(const RunConfig& config, std::istream& in,
                   std::ostream& out, std::ostream& err);

// plan: no input; one line {v, scheme, n, judgments, wire_calls, calls}
int run_plan(const RunConfig& config, std::ostream& out, std::ostream& err);

// scaffold: {id, problem, reference?} ->
//           {v, id, pools, answers, metrics?}
int run_scaffold(const RunConfig& config, std::istream& in, std::ostream& out,
                 std::ostream& err);

// judge-eval: {id, predicted, gold} per line ->
//             one report {v, n, agreement_pct, precision, recall, f1,
//             confusion}
int run_judge_eval(const RunConfig& config, std::istream& in,
                   std::ostream& out, std::ostream& err);

// Rounds to 4 decimals (half away from zero) and canonicalizes -0; all
// numeric fields in command output pass through this.
double round4(double v);

}  // namespace aggrl::cli
