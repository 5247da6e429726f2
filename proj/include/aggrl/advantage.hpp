#pragma once

// Group-relative advantage computation for policy-gradient post-training.
//
// grpo_advantages centers rewards on the group mean (optionally divided by
// the group std). passk_advantages reshapes binary rewards so the group is
// credited for pass@k rather than mean@1: correct rollouts keep (1 - mu)
// while incorrect ones are pushed down by the probability that a k-subset
// containing them holds no correct rollout. Intermediate arithmetic is exact
// rational; each advantage is converted to double exactly once, which makes
// outputs byte-stable and makes the k=1 case land bit-for-bit on the GRPO
// vector.

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <vector>

namespace aggrl::advantage {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct AdvantageConfig {
  int k = 1;                     // subset size for the pass@k offset
  bool normalize_by_std = false; // default matches the std-free estimator
  double sigma_epsilon = 1e-6;   // floor for the divisor when normalizing
};

struct AdvantageAssignment {
  std::vector<double> advantages;
  double mu = 0.0;
  double sigma = 0.0;                  // population std (divides by N)
  std::optional<double> offset;        // pass@k only; absent when no rollout
                                       // is incorrect
};

// Mean and population standard deviation of a non-empty reward group.
struct GroupStats {
  double mu = 0.0;
  double sigma = 0.0;
};
GroupStats group_stats(const std::vector<double>& rewards);

// a_i = r_i - mu, divided by max(sigma, sigma_epsilon) when normalizing.
// sigma == 0 with normalization on yields an explicit all-zero vector rather
// than a blow-up against the epsilon floor.
AdvantageAssignment grpo_advantages(const std::vector<double>& rewards,
                                    bool normalize_by_std = false,
                                    double sigma_epsilon = 1e-6);

// C(n, r) over arbitrary-precision integers; zero when r < 0 or r > n.
BigInt binomial(long long n, long long r);

// C(N_incorrect - 1, k - 1) / C(N - 1, k - 1): the probability that a
// uniformly drawn k-subset containing a given incorrect rollout contains no
// correct rollout. Requires 1 <= k <= N and 1 <= N_incorrect <= N.
Rational passk_offset_exact(int N, int N_incorrect, int k);
double passk_offset(int N, int N_incorrect, int k);

// Binary rewards only; a non-binary entry is rejected naming its index.
// Correct rollouts get (1 - mu), incorrect ones (1 - mu - offset). With
// normalize_by_std the division happens after the offset, mirroring the
// GRPO path; sigma == 0 again zeroes the vector.
AdvantageAssignment passk_advantages(const std::vector<double>& rewards,
                                     const AdvantageConfig& config);

// Exact forms of the two advantage vectors, before the final double
// conversion. Exposed so equivalence claims between the two paths can be
// checked with zero tolerance.
std::vector<Rational> grpo_advantages_exact(const std::vector<double>& rewards);
std::vector<Rational> passk_advantages_exact(const std::vector<double>& rewards,
                                             int k);

}  // namespace aggrl::advantage
