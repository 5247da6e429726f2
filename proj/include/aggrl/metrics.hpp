#pragma once

// Evaluation metrics over per-sample answers and correctness bits:
// mean@k, the unbiased pass@k estimator, a simulation-based majority@k, and
// a meta-evaluation of equivalence verifiers against gold labels.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aggrl/advantage.hpp"
#include "aggrl/equivalence_vote.hpp"

namespace aggrl::metrics {

// Fraction of correct samples. The name follows the mean@k convention where
// k is just the sample count of the input.
double mean_at_k(const std::vector<bool>& correctness);

// Unbiased estimator 1 - C(n-c, k)/C(n, k): the probability that a uniform
// k-subset of n samples (c of them correct) contains at least one correct
// sample. Exact rational internally; the double form rounds once.
advantage::Rational pass_at_k_exact(int n, int c, int k);
double pass_at_k_estimate(int n, int c, int k);

// Simulated majority@k: each trial draws k answers without replacement,
// groups them with the oracle (same matrix build + transitivity repair as
// the voting pipeline), and scores 1 iff the plurality group contains a
// correct answer. Plurality is threshold-free; mass ties go to the group
// seen earliest in the sampled order. Deterministic for a fixed seed.
double majority_at_k(const std::vector<std::string>& answers,
                     const std::vector<bool>& correctness, int k,
                     const vote::EquivalenceOracle& oracle,
                     std::uint64_t seed = 0, int trials = 1000);

// Exhaustive variant: averages over every k-subset in ascending index order
// instead of sampling. Only allowed for n <= 12 (C(12,6) = 924 subsets).
double majority_at_k_exhaustive(const std::vector<std::string>& answers,
                                const std::vector<bool>& correctness, int k,
                                const vote::EquivalenceOracle& oracle);

// Confusion of a verifier against gold equivalence labels. Positive class
// is "Equivalent" (true). Ratios with a zero denominator are reported
// absent rather than coerced to 0; all ratio fields are percentages.
struct MetaEvalReport {
  int n = 0;
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  double agreement_pct = 0.0;
  std::optional<double> precision_pct;
  std::optional<double> recall_pct;
  std::optional<double> f1_pct;
};
MetaEvalReport verifier_meta_eval(const std::vector<bool>& predicted,
                                  const std::vector<bool>& gold);

}  // namespace aggrl::metrics
