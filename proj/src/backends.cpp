#include "aggrl/backends.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "aggrl/common.hpp"
#include "aggrl/prompts.hpp"

namespace aggrl::backend {

namespace {

using nlohmann::json;

bool parse_full_double(std::string_view token, double* out) {
  if (token.empty()) return false;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc{} && ptr == end && std::isfinite(*out);
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Last well-formed <name>...</name> group whose trimmed content is a number.
// Scanning resumes right after each open tag so nested strays like
// "<score> <score> 1 </score>" still surface the real value.
std::optional<double> last_numeric_tag(const std::string& text,
                                       const std::string& name) {
  std::string open = "<" + name + ">";
  std::string close = "</" + name + ">";
  std::optional<double> found;
  std::size_t pos = 0;
  while (true) {
    std::size_t o = text.find(open, pos);
    if (o == std::string::npos) break;
    pos = o + open.size();
    std::size_t c = text.find(close, pos);
    if (c == std::string::npos) continue;  // unclosed stray
    double v;
    if (parse_full_double(trim(text.substr(pos, c - pos)), &v)) found = v;
  }
  return found;
}

// Validates one 0..10 score at 0.1 granularity. Returns the (possibly
// rounded) value or a ParseFailure reason.
std::variant<double, std::string> check_decimal_score(
    const std::string& tag, double v, const ParseOptions& options) {
  if (v < 0.0 || v > 10.0)
    return "<" + tag + "> value " + format_value(v) + " outside [0, 10]";
  double tenths = v * 10.0;
  if (std::abs(tenths - std::round(tenths)) <= 1e-6) return v;
  if (options.strict_granularity)
    return "<" + tag + "> value " + format_value(v) +
           " finer than 0.1 granularity";
  double rounded = std::round(tenths) / 10.0;
  if (options.warn)
    options.warn("<" + tag + "> value " + format_value(v) +
                 " rounded to " + format_value(rounded));
  return rounded;
}

}  // namespace

ParsedVerdict parse_score_tags(const std::string& text, const TagSchema& schema,
                               const ParseOptions& options) {
  switch (schema.kind) {
    case TagSchema::kPoint: {
      auto v = last_numeric_tag(text, "score");
      if (!v) return ParseFailure{"no well-formed <score> tag"};
      if (*v != 0.0 && *v != 1.0)
        return ParseFailure{"<score> value " + format_value(*v) +
                            " outside {0, 1}"};
      return PointScore{static_cast<int>(*v)};
    }
    case TagSchema::kPair: {
      auto a = last_numeric_tag(text, "score_A");
      if (!a) return ParseFailure{"no well-formed <score_A> tag"};
      auto b = last_numeric_tag(text, "score_B");
      if (!b) return ParseFailure{"no well-formed <score_B> tag"};
      auto ra = check_decimal_score("score_A", *a, options);
      if (auto* err = std::get_if<std::string>(&ra)) return ParseFailure{*err};
      auto rb = check_decimal_score("score_B", *b, options);
      if (auto* err = std::get_if<std::string>(&rb)) return ParseFailure{*err};
      return PairScores{std::get<double>(ra), std::get<double>(rb)};
    }
    case TagSchema::kList: {
      ListScores scores;
      for (int i = 1; i <= schema.k; ++i) {
        std::string tag = "score_" + std::to_string(i);
        auto v = last_numeric_tag(text, tag);
        if (!v) return ParseFailure{"no well-formed <" + tag + "> tag"};
        auto r = check_decimal_score(tag, *v, options);
        if (auto* err = std::get_if<std::string>(&r)) return ParseFailure{*err};
        scores.values.push_back(std::get<double>(r));
      }
      return scores;
    }
  }
  return ParseFailure{"unknown schema"};
}

std::optional<bool> parse_equivalence_verdict(const std::string& text) {
  std::string low;
  low.reserve(text.size());
  for (char c : text) low.push_back(static_cast<char>(std::tolower(
      static_cast<unsigned char>(c))));
  auto is_word = [&](std::size_t i) {
    return std::isalpha(static_cast<unsigned char>(low[i]));
  };
  const std::string word = "equivalent";
  std::optional<bool> verdict;
  std::size_t pos = 0;
  while ((pos = low.find(word, pos)) != std::string::npos) {
    std::size_t end = pos + word.size();
    bool standalone = (pos == 0 || !is_word(pos - 1)) &&
                      (end == low.size() || !is_word(end));
    if (standalone) {
      // Walk back over separators to see whether "not" precedes the word.
      std::size_t q = pos;
      while (q > 0 && (low[q - 1] == ' ' || low[q - 1] == '\t' ||
                       low[q - 1] == '\n' || low[q - 1] == '\r' ||
                       low[q - 1] == '-' || low[q - 1] == '_'))
        --q;
      bool negated = q >= 3 && low.compare(q - 3, 3, "not") == 0 &&
                     (q == 3 || !is_word(q - 4));
      verdict = !negated;
    }
    pos = end;
  }
  return verdict;
}

// ---- scripted / echo ----------------------------------------------------

ScriptedBackend::ScriptedBackend(
    const std::map<std::string, std::vector<std::string>>& by_prompt) {
  for (const auto& [prompt, completions] : by_prompt)
    entries_[fnv1a64_hex(prompt)] = completions;
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open script file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw BackendError("script file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("v", 0) != 1 || !doc.contains("entries") ||
      !doc["entries"].is_object())
    throw BackendError("script file " + path +
                       " must be {\"v\": 1, \"entries\": {...}}");
  ScriptedBackend b;
  for (const auto& [key, value] : doc["entries"].items()) {
    if (!value.is_array())
      throw BackendError("script entry " + key + " is not an array");
    std::vector<std::string> completions;
    for (const auto& item : value) {
      if (!item.is_string())
        throw BackendError("script entry " + key + " holds a non-string");
      completions.push_back(item.get<std::string>());
    }
    b.entries_[key] = std::move(completions);
  }
  return b;
}

void ScriptedBackend::write_file(
    const std::string& path,
    const std::map<std::string, std::vector<std::string>>& by_prompt) {
  json entries = json::object();
  for (const auto& [prompt, completions] : by_prompt)
    entries[fnv1a64_hex(prompt)] = completions;
  json doc = {{"v", 1}, {"entries", entries}};
  std::ofstream out(path);
  if (!out) throw BackendError("cannot write script file: " + path);
  out << doc.dump(2) << "\n";
}

std::vector<std::string> ScriptedBackend::generate(
    const GenerationRequest& request) {
  std::string key = fnv1a64_hex(request.prompt);
  auto it = entries_.find(key);
  if (it == entries_.end())
    throw BackendError("no script entry for prompt hash " + key);
  if (static_cast<int>(it->second.size()) < request.count)
    throw BackendError("insufficient completions for prompt hash " + key +
                       ": have " + std::to_string(it->second.size()) +
                       ", need " + std::to_string(request.count));
  return {it->second.begin(), it->second.begin() + request.count};
}

std::vector<std::string> EchoBackend::generate(
    const GenerationRequest& request) {
  const std::string& p = request.prompt;
  std::string completion = p;
  std::string attempts_marker =
      "\n" + std::string(prompts::kAggregationAttempts) + "\n";
  if (p.rfind(prompts::kAggregationHead, 0) == 0 &&
      p.find("\n" + std::string(prompts::kAggregationDivider) + "\n") !=
          std::string::npos) {
    std::size_t at = p.find(attempts_marker);
    if (at != std::string::npos) {
      std::size_t start = at + attempts_marker.size();
      std::size_t nl = p.find('\n', start);
      completion = p.substr(start, nl == std::string::npos ? nl : nl - start);
    }
  }
  return std::vector<std::string>(static_cast<std::size_t>(request.count),
                                  completion);
}

// ---- remote --------------------------------------------------------------

namespace {

// Splits "scheme://host[:port][/path]" into client base and path prefix.
void split_endpoint(const std::string& url, std::string* host_base,
                    std::string* path_base) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw BackendError("endpoint URL must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    *host_base = url;
    *path_base = "";
    return;
  }
  *host_base = url.substr(0, path_start);
  *path_base = url.substr(path_start);
  while (!path_base->empty() && path_base->back() == '/') path_base->pop_back();
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

std::string snippet(const std::string& s) {
  return s.size() <= 200 ? s : s.substr(0, 200) + "...";
}

}  // namespace

RemoteBackend::RemoteBackend(BackendProfile profile)
    : profile_(std::move(profile)) {
  if (profile_.max_in_flight < 1)
    throw std::invalid_argument("max_in_flight must be at least 1");
  if (profile_.retry.max_attempts < 1)
    throw std::invalid_argument("retry.max_attempts must be at least 1");
  split_endpoint(profile_.endpoint_url, &host_base_, &path_base_);
  if (const char* token = std::getenv(profile_.auth_env_var.c_str()))
    auth_token_ = token;
}

std::string RemoteBackend::post_once(const std::string& body,
                                     std::string* error) {
  {
    std::unique_lock<std::mutex> lock(mu_);
    slot_free_.wait(lock, [&] { return in_flight_ < profile_.max_in_flight; });
    ++in_flight_;
  }
  struct SlotRelease {
    RemoteBackend* self;
    ~SlotRelease() {
      std::lock_guard<std::mutex> lock(self->mu_);
      --self->in_flight_;
      self->slot_free_.notify_one();
    }
  } release{this};

  httplib::Client client(host_base_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(
      profile_.request_timeout);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  client.set_write_timeout(secs.count(), 0);
  httplib::Headers headers;
  if (!auth_token_.empty())
    headers.emplace("Authorization", "Bearer " + auth_token_);

  auto res = client.Post(path_base_ + "/chat/completions", headers, body,
                         "application/json");
  if (!res) {
    *error = "transport error: " + httplib::to_string(res.error());
    return "";
  }
  if (res->status != 200) {
    *error = "HTTP " + std::to_string(res->status) + ": " + snippet(res->body);
    if (!retryable_status(res->status))
      throw BackendError("chat completion rejected, " + *error);
    return "";
  }
  error->clear();
  return res->body;
}

std::string RemoteBackend::post_with_retry(const std::string& body) {
  std::string attempts_log;
  for (int attempt = 1; attempt <= profile_.retry.max_attempts; ++attempt) {
    std::string error;
    std::string response = post_once(body, &error);
    if (error.empty()) return response;
    attempts_log += "\n  attempt " + std::to_string(attempt) + ": " + error;
    if (attempt < profile_.retry.max_attempts) {
      auto delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(profile_.retry.base_delay.count()) *
          std::pow(profile_.retry.factor, attempt - 1)));
      std::this_thread::sleep_for(delay);
    }
  }
  throw TransportExhausted("chat completion failed after " +
                           std::to_string(profile_.retry.max_attempts) +
                           " attempts:" + attempts_log);
}

std::vector<std::string> RemoteBackend::generate(
    const GenerationRequest& request) {
  if (request.count < 1)
    throw std::invalid_argument("generation count must be positive");
  json payload = {
      {"model", profile_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.params.temperature},
      {"top_p", request.params.top_p},
      {"max_tokens", request.params.max_tokens},
  };
  if (request.params.top_k) payload["top_k"] = *request.params.top_k;

  auto extract_choices = [&](const std::string& body) {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception& e) {
      throw BackendError(std::string("chat completion body is not JSON: ") +
                         e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty())
      throw BackendError("chat completion has no choices: " + snippet(body));
    std::vector<std::string> contents;
    for (const auto& choice : doc["choices"]) {
      if (!choice.contains("message") || !choice["message"].contains("content") ||
          !choice["message"]["content"].is_string())
        throw BackendError("chat completion choice lacks message.content");
      contents.push_back(choice["message"]["content"].get<std::string>());
    }
    return contents;
  };

  std::vector<std::string> out;
  if (request.count > 1 && profile_.supports_n) {
    payload["n"] = request.count;
    out = extract_choices(post_with_retry(payload.dump()));
    if (static_cast<int>(out.size()) < request.count)
      throw BackendError("asked for n=" + std::to_string(request.count) +
                         " choices, got " + std::to_string(out.size()));
    out.resize(request.count);
  } else {
    std::string body = payload.dump();
    for (int i = 0; i < request.count; ++i)
      out.push_back(extract_choices(post_with_retry(body)).front());
  }
  return out;
}

// ---- judge helpers --------------------------------------------------------

JudgeVerdict judge_pointwise(Backend& backend, const std::string& instruction,
                             const std::string& response,
                             const std::optional<std::string>& reference,
                             const SamplingParams& params,
                             const ParseOptions& options) {
  std::string prompt =
      reference ? prompts::render_pointwise_with_reference(instruction,
                                                           *reference, response)
                : prompts::render_pointwise(instruction, response);
  std::string raw = backend.generate({prompt, params, 1}).front();
  return {raw, parse_score_tags(raw, point_schema(), options)};
}

JudgeVerdict judge_pairwise(Backend& backend, const std::string& instruction,
                            const std::string& response_a,
                            const std::string& response_b,
                            const SamplingParams& params,
                            const ParseOptions& options) {
  std::string prompt = prompts::render_pairwise(instruction, response_a,
                                                response_b);
  std::string raw = backend.generate({prompt, params, 1}).front();
  return {raw, parse_score_tags(raw, pair_schema(), options)};
}

JudgeVerdict judge_listwise(Backend& backend, const std::string& instruction,
                            const std::vector<std::string>& responses,
                            const SamplingParams& params,
                            const ParseOptions& options) {
  std::string prompt = prompts::render_listwise(instruction, responses);
  std::string raw = backend.generate({prompt, params, 1}).front();
  return {raw, parse_score_tags(
                   raw, list_schema(static_cast<int>(responses.size())),
                   options)};
}

bool check_equivalence(Backend& backend, const std::string& problem,
                       const std::string& reference,
                       const std::string& prediction,
                       const SamplingParams& params) {
  std::string prompt = prompts::render_equivalence(problem, reference,
                                                   prediction);
  std::string raw = backend.generate({prompt, params, 1}).front();
  auto verdict = parse_equivalence_verdict(raw);
  if (!verdict)
    throw BackendError("equivalence verdict missing from completion: \"" +
                       snippet(raw) + "\"");
  return *verdict;
}

}  // namespace aggrl::backend
