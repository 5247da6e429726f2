#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "aggrl/cli.hpp"

using aggrl::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"aggrl: reward orchestration for LLM post-training"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; flags override it");

  RunConfig config;
  std::string in_path = "-";
  std::string out_path = "-";

  app.add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  app.add_option("--backend", config.backend,
                 "Model backend: exact, scripted, echo, or remote")
      ->check(CLI::IsMember({"exact", "scripted", "echo", "remote"}))
      ->capture_default_str();
  app.add_option("--script", config.script_path,
                 "Scripted backend: JSON completion table");
  app.add_option("--endpoint", config.endpoint,
                 "Remote backend: base URL (e.g. https://host/v1)");
  app.add_option("--model", config.model, "Remote backend: model name");
  app.add_option("--max-in-flight", config.max_in_flight,
                 "Remote backend: concurrent request cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--strict-scores", config.strict_scores,
               "Reject judge scores finer than 0.1 instead of rounding");
  app.add_option("--out", out_path, "Output path, '-' for stdout")
      ->capture_default_str();

  CLI::App* vote = app.add_subcommand(
      "vote", "Majority voting over equivalence-grouped predictions");
  vote->add_option("input", in_path, "Input JSONL, '-' for stdin");
  vote->add_option("--tau", config.tau, "Agreement threshold for repair")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  vote->add_option("--theta", config.theta,
                   "Majority fraction of the prediction count")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  CLI::App* advantages = app.add_subcommand(
      "advantages", "Group-relative advantages from reward groups");
  advantages->add_option("input", in_path, "Input JSONL, '-' for stdin");
  advantages->add_option("--mode", config.mode, "grpo or passk")
      ->check(CLI::IsMember({"grpo", "passk"}))
      ->capture_default_str();
  advantages->add_option("--k", config.k, "Subset size for passk")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  advantages->add_flag("--normalize", config.normalize,
                       "Divide by the group std");
  advantages->add_option("--sigma-epsilon", config.sigma_epsilon,
                         "Divisor floor when normalizing")
      ->capture_default_str();

  CLI::App* plan = app.add_subcommand(
      "plan", "Emit the judge-call plan for a comparison scheme");
  plan->add_option("--scheme", config.scheme,
                   "pointwise, exhaustive, pivot, or listwise")
      ->check(CLI::IsMember({"pointwise", "exhaustive", "pivot", "listwise"}))
      ->capture_default_str();
  plan->add_option("--n", config.n, "Rollout count")->required();
  plan->add_option("--list-k", config.list_k, "Tuple size for listwise")
      ->capture_default_str();
  plan->add_option("--pivot-index", config.pivot_index,
                   "Fixed pivot (default: drawn from --seed)");

  CLI::App* scaffold = app.add_subcommand(
      "scaffold", "Generate-then-aggregate candidate pools");
  scaffold->add_option("input", in_path, "Input JSONL, '-' for stdin");
  scaffold->add_option("--m", config.m, "Pool size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scaffold->add_option("--rounds", config.rounds, "Aggregation rounds")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  scaffold->add_option("--initial-temperature", config.initial_temperature,
                       "Sampling temperature for the initial pool")
      ->capture_default_str();
  scaffold
      ->add_option("--aggregation-temperature", config.aggregation_temperature,
                   "Sampling temperature for aggregation rounds")
      ->capture_default_str();
  scaffold->add_option("--top-p", config.top_p, "Nucleus sampling mass")
      ->capture_default_str();
  scaffold->add_option("--top-k", config.top_k, "Top-k cutoff, -1 disables")
      ->capture_default_str();
  scaffold->add_option("--max-tokens", config.max_tokens, "Completion budget")
      ->capture_default_str();
  scaffold->add_option("--extraction", config.extraction,
                       "Answer extraction: boxed or answer-tag")
      ->check(CLI::IsMember({"boxed", "answer-tag"}))
      ->capture_default_str();
  scaffold->add_option("--verifier", config.verifier,
                       "Correctness oracle for metrics: exact, scripted, remote")
      ->check(CLI::IsMember({"exact", "scripted", "remote"}))
      ->capture_default_str();
  scaffold->add_option("--trials", config.trials,
                       "majority@m sampling trials when m > 12")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scaffold->add_option("--max-prompt-chars", config.max_prompt_chars,
                       "Fail aggregation prompts longer than this");

  CLI::App* judge_eval = app.add_subcommand(
      "judge-eval", "Meta-evaluate verifier verdicts against gold labels");
  judge_eval->add_option("input", in_path, "Input JSONL, '-' for stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return aggrl::cli::kExitUsage;
  }

  std::ifstream file_in;
  std::istream* in = &std::cin;
  if (in_path != "-") {
    file_in.open(in_path);
    if (!file_in) {
      std::cerr << "cannot open input: " << in_path << "\n";
      return aggrl::cli::kExitUsage;
    }
    in = &file_in;
  }
  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (out_path != "-") {
    file_out.open(out_path);
    if (!file_out) {
      std::cerr << "cannot open output: " << out_path << "\n";
      return aggrl::cli::kExitUsage;
    }
    out = &file_out;
  }

  int rc = aggrl::cli::kExitUsage;
  if (vote->parsed()) rc = run_vote(config, *in, *out, std::cerr);
  else if (advantages->parsed()) rc = run_advantages(config, *in, *out, std::cerr);
  else if (plan->parsed()) rc = run_plan(config, *out, std::cerr);
  else if (scaffold->parsed()) rc = run_scaffold(config, *in, *out, std::cerr);
  else if (judge_eval->parsed()) rc = run_judge_eval(config, *in, *out, std::cerr);
  out->flush();
  return rc;
}
