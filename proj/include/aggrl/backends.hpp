#pragma once

// Generation and judging backends plus verdict parsing.
//
// A Backend turns a prompt into completions. Three implementations:
//   ScriptedBackend  - immutable table keyed by prompt hash, for replayable
//                      runs and tests
//   EchoBackend      - returns the prompt (or, for aggregation prompts, the
//                      first candidate), a cheap fixed-point generator
//   RemoteBackend    - OpenAI-compatible chat-completions client
//
// Judge helpers render the matching prompt template, run the backend, and
// parse the score tags out of the completion.

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace aggrl::backend {

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  std::optional<int> top_k;  // unset = disabled
  int max_tokens = 4096;
};

struct GenerationRequest {
  std::string prompt;
  SamplingParams params;
  int count = 1;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns exactly request.count completions. Throws BackendError (or
  // TransportExhausted) on failure; never returns a short list silently.
  virtual std::vector<std::string> generate(const GenerationRequest& request) = 0;
};

// ---- verdict parsing --------------------------------------------------

struct PointScore {
  int value = 0;  // 0 or 1
};
struct PairScores {
  double a = 0.0;  // score_A
  double b = 0.0;  // score_B, both in [0, 10] on a 0.1 grid
};
struct ListScores {
  std::vector<double> values;  // score_1..score_K, same range as pairwise
};
struct EquivalenceVerdict {
  bool equivalent = false;
};
struct ParseFailure {
  std::string reason;
};

using ParsedVerdict = std::variant<PointScore, PairScores, ListScores,
                                   EquivalenceVerdict, ParseFailure>;

struct JudgeVerdict {
  std::string raw_text;  // full completion, kept for audits
  ParsedVerdict parsed;
};

struct TagSchema {
  enum Kind { kPoint, kPair, kList };
  Kind kind = kPoint;
  int k = 0;  // list size, kList only
};
inline TagSchema point_schema() { return {TagSchema::kPoint, 0}; }
inline TagSchema pair_schema() { return {TagSchema::kPair, 0}; }
inline TagSchema list_schema(int k) { return {TagSchema::kList, k}; }

struct ParseOptions {
  // Lenient mode (default) rounds finer-than-0.1 scores to the grid and
  // reports the coercion through warn; strict mode turns them into
  // ParseFailure.
  bool strict_granularity = false;
  std::function<void(const std::string&)> warn;
};

// Pulls the verdict out of a judge completion. Thinking traces may contain
// stray or unclosed tags, so the LAST well-formed tag group wins, where
// well-formed means open tag, close tag, and a numeric token between them
// (surrounding whitespace ignored). Values outside the schema's range, or
// off-grid values in strict mode, come back as ParseFailure.
ParsedVerdict parse_score_tags(const std::string& text, const TagSchema& schema,
                               const ParseOptions& options = {});

// Maps a verifier completion onto the "Equivalent" / "Not Equivalent"
// vocabulary. The last standalone occurrence decides; nullopt when the text
// never utters either verdict.
std::optional<bool> parse_equivalence_verdict(const std::string& text);

// ---- scripted / echo backends -----------------------------------------

// Deterministic replay backend. The table is fixed at construction; lookups
// key on fnv1a64_hex(prompt) so script files do not need to embed full
// prompts. generate() returns the first `count` completions of the entry
// and fails when the entry is missing or shorter than `count`.
class ScriptedBackend : public Backend {
 public:
  // Keys of `by_prompt` are full prompt strings (hashed internally).
  explicit ScriptedBackend(
      const std::map<std::string, std::vector<std::string>>& by_prompt);

  // File format: {"v": 1, "entries": {"<fnv1a64 hex of prompt>": [...]}}.
  static ScriptedBackend from_file(const std::string& path);

  // Writes the file format above; fixture generators use this so the hash
  // scheme stays in one place.
  static void write_file(
      const std::string& path,
      const std::map<std::string, std::vector<std::string>>& by_prompt);

  std::vector<std::string> generate(const GenerationRequest& request) override;

 private:
  ScriptedBackend() = default;
  std::map<std::string, std::vector<std::string>> entries_;  // hash -> completions
};

// Echoes the prompt back `count` times. Aggregation prompts are special:
// the first candidate line is returned instead, which makes a pool collapse
// to its first member and then stay fixed, handy for scaffold tests. Only
// single-line candidates round-trip exactly.
class EchoBackend : public Backend {
 public:
  std::vector<std::string> generate(const GenerationRequest& request) override;
};

// Adapts an arbitrary callable; test doubles use this.
class CallbackBackend : public Backend {
 public:
  using Fn = std::function<std::vector<std::string>(const GenerationRequest&)>;
  explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
  std::vector<std::string> generate(const GenerationRequest& request) override {
    return fn_(request);
  }

 private:
  Fn fn_;
};

// ---- remote backend ----------------------------------------------------

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};  // doubles per attempt
  double factor = 2.0;
};

struct BackendProfile {
  std::string endpoint_url;  // base URL incl. any /v1 prefix
  std::string model_name;
  // Name of the env var holding the bearer token. The token is read once at
  // construction and lives only in memory; it is never logged or written.
  std::string auth_env_var = "AGGRL_API_KEY";
  int max_in_flight = 4;
  bool supports_n = true;  // batch count>1 into one wire call via `n`
  RetryPolicy retry;
  std::chrono::milliseconds request_timeout{120000};
};

// OpenAI-compatible chat-completions client. Each generate() posts a single
// user turn; transport failures, 429 and 5xx are retried with exponential
// backoff, other 4xx fail immediately. Results preserve choice order, and a
// shared in-flight limit caps concurrency across threads.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendProfile profile);
  std::vector<std::string> generate(const GenerationRequest& request) override;

 private:
  std::string post_once(const std::string& body, std::string* error);
  std::string post_with_retry(const std::string& body);

  BackendProfile profile_;
  std::string auth_token_;
  std::string host_base_;  // scheme://host[:port]
  std::string path_base_;  // path prefix from endpoint_url

  std::mutex mu_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

// ---- judge helpers -----------------------------------------------------

// Render, call with count=1, parse. The reference, when given, switches the
// pointwise prompt to its reference-based variant.
JudgeVerdict judge_pointwise(Backend& backend, const std::string& instruction,
                             const std::string& response,
                             const std::optional<std::string>& reference = {},
                             const SamplingParams& params = {},
                             const ParseOptions& options = {});
JudgeVerdict judge_pairwise(Backend& backend, const std::string& instruction,
                            const std::string& response_a,
                            const std::string& response_b,
                            const SamplingParams& params = {},
                            const ParseOptions& options = {});
JudgeVerdict judge_listwise(Backend& backend, const std::string& instruction,
                            const std::vector<std::string>& responses,
                            const SamplingParams& params = {},
                            const ParseOptions& options = {});

// Verifier call for reference-vs-prediction equivalence. An unmappable
// verdict throws BackendError; callers voting over many pairs treat that as
// a whole-vote failure rather than guessing.
bool check_equivalence(Backend& backend, const std::string& problem,
                       const std::string& reference,
                       const std::string& prediction,
                       const SamplingParams& params = {});

}  // namespace aggrl::backend
