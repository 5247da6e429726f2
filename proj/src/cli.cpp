#include "aggrl/cli.hpp"

#include <cmath>
#include <istream>
#include <memory>
#include <ostream>
#include <vector>

#include "json.hpp"

#include "aggrl/advantage.hpp"
#include "aggrl/backends.hpp"
#include "aggrl/common.hpp"
#include "aggrl/equivalence_vote.hpp"
#include "aggrl/metrics.hpp"
#include "aggrl/reward_aggregation.hpp"
#include "aggrl/scaffold.hpp"

namespace aggrl::cli {

namespace {

using nlohmann::json;

double finite_or_throw(const json& v, const char* what) {
  if (!v.is_number()) throw std::invalid_argument(std::string(what) + " is not a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw std::invalid_argument(std::string(what) + " is not finite");
  return d;
}

// Reads one JSONL stream, invoking handle(line_number, parsed, raw_object)
// per line. handle returns the output object for that line; throwing inside
// it produces an error record instead. Returns the exit code.
template <typename Handler>
int for_each_line(std::istream& in, std::ostream& out, Handler&& handle) {
  std::string line;
  int line_no = 0;
  bool any_failed = false;
  bool transport_dead = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;  // stray blank lines are not records
    json record;
    json output;
    try {
      record = json::parse(line);
      if (!record.is_object()) throw std::invalid_argument("line is not a JSON object");
      output = handle(line_no, record);
    } catch (const TransportExhausted& e) {
      // The backend is gone; later lines would only burn the retry budget
      // again. Emit the error record and stop.
      output = {{"v", 1}, {"line", line_no}, {"error", e.what()}};
      if (record.is_object() && record.contains("id")) output["id"] = record["id"];
      transport_dead = true;
    } catch (const std::exception& e) {
      any_failed = true;
      output = {{"v", 1}, {"line", line_no}, {"error", e.what()}};
      if (record.is_object() && record.contains("id")) output["id"] = record["id"];
    }
    out << output.dump() << "\n";
    if (transport_dead) return kExitTransport;
  }
  return any_failed ? kExitPartial : kExitOk;
}

// Output records start from the input object so fields this tool does not
// know about ride along untouched; consumed inputs are dropped to keep the
// output schema clean.
json passthrough(const json& record, std::initializer_list<const char*> consumed) {
  json out = record;
  for (const char* field : consumed) out.erase(field);
  out["v"] = 1;
  return out;
}

std::unique_ptr<backend::Backend> make_backend(const RunConfig& config) {
  if (config.backend == "scripted") {
    if (config.script_path.empty())
      throw std::invalid_argument("scripted backend needs --script");
    return std::make_unique<backend::ScriptedBackend>(
        backend::ScriptedBackend::from_file(config.script_path));
  }
  if (config.backend == "echo") return std::make_unique<backend::EchoBackend>();
  if (config.backend == "remote") {
    if (config.endpoint.empty())
      throw std::invalid_argument("remote backend needs --endpoint");
    backend::BackendProfile profile;
    profile.endpoint_url = config.endpoint;
    profile.model_name = config.model;
    profile.max_in_flight = config.max_in_flight;
    profile.retry.base_delay = std::chrono::milliseconds(config.retry_base_ms);
    return std::make_unique<backend::RemoteBackend>(profile);
  }
  throw std::invalid_argument("backend '" + config.backend +
                              "' cannot generate (choose scripted, echo, or remote)");
}

// Equivalence oracle for one problem. `exact` needs no backend; the others
// run the verifier prompt through the judge backend, with `a` standing in
// the reference slot for prediction-vs-prediction checks.
vote::EquivalenceOracle make_oracle(const std::string& kind,
                                    backend::Backend* judge,
                                    const std::string& problem) {
  if (kind == "exact")
    return [](const std::string& a, const std::string& b) { return a == b; };
  return [judge, problem](const std::string& a, const std::string& b) {
    return backend::check_equivalence(*judge, problem, a, b);
  };
}

std::string require_id(const json& record) {
  if (!record.contains("id")) throw std::invalid_argument("missing id");
  const json& id = record["id"];
  return id.is_string() ? id.get<std::string>() : id.dump();
}

json round4_array(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) arr.push_back(round4(v));
  return arr;
}

backend::SamplingParams sampling_params(const RunConfig& config,
                                        double temperature) {
  backend::SamplingParams p;
  p.temperature = temperature;
  p.top_p = config.top_p;
  if (config.top_k >= 0) p.top_k = config.top_k;
  p.max_tokens = config.max_tokens;
  return p;
}

}  // namespace

double round4(double v) {
  double r = std::round(v * 1e4) / 1e4;
  if (r == 0.0) r = 0.0;  // never emit -0
  return r;
}

int run_vote(const RunConfig& config, std::istream& in, std::ostream& out,
             std::ostream& err) {
  std::unique_ptr<backend::Backend> judge;
  if (config.backend != "exact") {
    try {
      judge = make_backend(config);
    } catch (const std::exception& e) {
      err << "vote: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  vote::VoteConfig vote_config{config.tau, config.theta};

  return for_each_line(in, out, [&](int, const json& record) {
    std::string id = require_id(record);
    if (!record.contains("predictions") || !record["predictions"].is_array())
      throw std::invalid_argument("missing predictions array");
    vote::PredictionSet set;
    set.problem_id = id;
    for (const json& p : record["predictions"]) {
      if (!p.is_string())
        throw std::invalid_argument("predictions must be strings");
      set.predictions.push_back(p.get<std::string>());
    }
    std::string problem = record.value("problem", std::string());

    vote::VoteResult result = vote::conservative_majority_vote(
        set, make_oracle(config.backend, judge.get(), problem), vote_config);

    json output = passthrough(record, {"predictions", "problem"});
    json groups = json::array();
    for (const auto& g : result.groups) {
      groups.push_back({{"members", g.members},
                        {"representative", g.representative},
                        {"vote_mass", g.vote_mass}});
    }
    output["groups"] = groups;
    if (const auto* m = std::get_if<vote::Majority>(&result.outcome)) {
      output["status"] = "majority";
      output["answer"] = m->answer;
      output["count"] = m->count;
    } else if (const auto* nm = std::get_if<vote::NoMajority>(&result.outcome)) {
      output["status"] = "no_majority";
      output["count"] = nm->top_count;
    } else {
      output["status"] = "no_valid";
      output["count"] = 0;
    }
    return output;
  });
}

int run_advantages(const RunConfig& config, std::istream& in,
                   std::ostream& out, std::ostream& err) {
  if (config.mode != "grpo" && config.mode != "passk") {
    err << "advantages: unknown mode '" << config.mode << "'\n";
    return kExitUsage;
  }
  return for_each_line(in, out, [&](int, const json& record) {
    std::string id = require_id(record);
    (void)id;
    if (!record.contains("rewards") || !record["rewards"].is_array())
      throw std::invalid_argument("missing rewards array");
    std::vector<double> rewards;
    for (const json& r : record["rewards"])
      rewards.push_back(finite_or_throw(r, "reward"));

    advantage::AdvantageAssignment result;
    if (config.mode == "grpo") {
      result = advantage::grpo_advantages(rewards, config.normalize,
                                          config.sigma_epsilon);
    } else {
      advantage::AdvantageConfig ac;
      ac.k = config.k;
      ac.normalize_by_std = config.normalize;
      ac.sigma_epsilon = config.sigma_epsilon;
      result = advantage::passk_advantages(rewards, ac);
    }

    json output = passthrough(record, {"rewards"});
    output["mode"] = config.mode;
    if (config.mode == "passk") output["k"] = config.k;
    output["advantages"] = round4_array(result.advantages);
    output["mu"] = round4(result.mu);
    output["sigma"] = round4(result.sigma);
    if (result.offset) output["offset"] = round4(*result.offset);
    return output;
  });
}

int run_plan(const RunConfig& config, std::ostream& out, std::ostream& err) {
  reward::Scheme scheme;
  if (config.scheme == "pointwise") scheme = reward::Pointwise{};
  else if (config.scheme == "exhaustive") scheme = reward::PairwiseExhaustive{};
  else if (config.scheme == "pivot") scheme = reward::PairwisePivot{config.pivot_index};
  else if (config.scheme == "listwise") scheme = reward::Listwise{config.list_k};
  else {
    err << "plan: unknown scheme '" << config.scheme << "'\n";
    return kExitUsage;
  }
  reward::ComparisonPlan plan;
  reward::CallCount count;
  try {
    plan = reward::plan(scheme, config.n, config.seed);
    count = reward::call_count(scheme, config.n);
  } catch (const std::invalid_argument& e) {
    err << "plan: " << e.what() << "\n";
    return kExitUsage;
  }
  json calls = json::array();
  for (const auto& call : plan.calls) calls.push_back(call.indices);
  json output = {{"v", 1},
                 {"scheme", config.scheme},
                 {"n", config.n},
                 {"judgments", count.judgments},
                 {"wire_calls", count.wire_calls},
                 {"calls", calls}};
  out << output.dump() << "\n";
  return kExitOk;
}

int run_scaffold(const RunConfig& config, std::istream& in, std::ostream& out,
                 std::ostream& err) {
  std::unique_ptr<backend::Backend> generator;
  try {
    generator = make_backend(config);
  } catch (const std::exception& e) {
    err << "scaffold: " << e.what() << "\n";
    return kExitUsage;
  }
  std::unique_ptr<backend::Backend> verifier_backend;
  if (config.verifier != "exact") {
    RunConfig verifier_config = config;
    verifier_config.backend = config.verifier;
    try {
      verifier_backend = make_backend(verifier_config);
    } catch (const std::exception& e) {
      err << "scaffold: verifier: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  scaffold::ScaffoldConfig sc;
  sc.m = config.m;
  sc.T = config.rounds;
  sc.initial_params = sampling_params(config, config.initial_temperature);
  sc.aggregation_params = sampling_params(config, config.aggregation_temperature);
  sc.extraction = config.extraction == "answer-tag"
                      ? scaffold::AnswerExtraction::kAnswerTag
                      : scaffold::AnswerExtraction::kBoxedLast;
  if (config.max_prompt_chars)
    sc.max_prompt_chars = static_cast<std::size_t>(*config.max_prompt_chars);

  return for_each_line(in, out, [&](int, const json& record) {
    std::string id = require_id(record);
    (void)id;
    if (!record.contains("problem") || !record["problem"].is_string())
      throw std::invalid_argument("missing problem string");
    std::string problem = record["problem"].get<std::string>();

    scaffold::ScaffoldTrace trace = scaffold::run(*generator, problem, sc);

    json pools = json::array();
    for (const auto& pool : trace.pools) pools.push_back(pool.candidates);
    json answers = json::array();
    for (const auto& round : trace.extracted) {
      json row = json::array();
      for (const auto& a : round) {
        if (a) row.push_back(*a);
        else row.push_back(nullptr);
      }
      answers.push_back(row);
    }

    json output = passthrough(record, {"problem", "reference"});
    output["pools"] = pools;
    output["answers"] = answers;

    if (record.contains("reference") && record["reference"].is_string()) {
      std::string reference = record["reference"].get<std::string>();
      auto oracle = make_oracle(config.verifier, verifier_backend.get(), problem);
      json metrics = json::array();
      for (std::size_t r = 0; r < trace.extracted.size(); ++r) {
        std::vector<std::string> extracted_answers;
        std::vector<bool> correct;
        int hits = 0;
        for (const auto& a : trace.extracted[r]) {
          // A candidate with no extractable answer scores as incorrect but
          // still occupies its pool slot for the majority grouping.
          std::string answer = a.value_or(std::string());
          bool ok = a.has_value() && oracle(reference, answer);
          extracted_answers.push_back(answer);
          correct.push_back(ok);
          hits += ok;
        }
        int n = static_cast<int>(correct.size());
        double majority =
            n <= 12 ? metrics::majority_at_k_exhaustive(extracted_answers,
                                                        correct, n, oracle)
                    : metrics::majority_at_k(extracted_answers, correct, n,
                                             oracle, config.seed, config.trials);
        metrics.push_back({{"round", static_cast<int>(r)},
                           {"pass1", round4(metrics::mean_at_k(correct))},
                           {"pass_at_m", round4(metrics::pass_at_k_estimate(n, hits, n))},
                           {"majority_at_m", round4(majority)}});
      }
      output["metrics"] = metrics;
    }
    return output;
  });
}

int run_judge_eval(const RunConfig& config, std::istream& in,
                   std::ostream& out, std::ostream& err) {
  (void)config;
  std::vector<bool> predicted, gold;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      err << "judge-eval: line " << line_no << ": " << e.what() << "\n";
      return kExitPartial;
    }
    if (!record.is_object() || !record.contains("predicted") ||
        !record["predicted"].is_boolean() || !record.contains("gold") ||
        !record["gold"].is_boolean()) {
      err << "judge-eval: line " << line_no
          << ": need boolean fields predicted and gold\n";
      return kExitPartial;
    }
    predicted.push_back(record["predicted"].get<bool>());
    gold.push_back(record["gold"].get<bool>());
  }
  if (predicted.empty()) {
    err << "judge-eval: no input lines\n";
    return kExitPartial;
  }
  metrics::MetaEvalReport report = metrics::verifier_meta_eval(predicted, gold);
  json output = {{"v", 1},
                 {"n", report.n},
                 {"agreement_pct", round4(report.agreement_pct)},
                 {"precision", report.precision_pct
                                   ? json(round4(*report.precision_pct))
                                   : json(nullptr)},
                 {"recall", report.recall_pct ? json(round4(*report.recall_pct))
                                              : json(nullptr)},
                 {"f1", report.f1_pct ? json(round4(*report.f1_pct))
                                      : json(nullptr)},
                 {"confusion",
                  {{"tp", report.tp},
                   {"fp", report.fp},
                   {"fn", report.fn},
                   {"tn", report.tn}}}};
  out << output.dump() << "\n";
  return kExitOk;
}

}  // namespace aggrl::cli
