#include "aggrl/metrics.hpp"

#include <random>
#include <stdexcept>

#include "aggrl/common.hpp"

namespace aggrl::metrics {

namespace {

using advantage::BigInt;
using advantage::Rational;

// Plurality winner over one sampled answer sequence: group with the
// conservative pipeline (tau matches VoteConfig's default), take the group
// with the largest vote mass, break mass ties toward the group whose first
// unique appeared earliest in the sequence. Returns 1 when that group holds
// an answer whose correctness bit is set.
bool plurality_trial(const std::vector<std::string>& sampled_answers,
                     const std::vector<bool>& sampled_correct,
                     const vote::EquivalenceOracle& oracle) {
  vote::UniqueCounts uc = vote::unique_with_counts(sampled_answers);
  vote::EquivalenceMatrix repaired = vote::repair_transitivity(
      vote::build_matrix(uc.uniques, oracle), vote::VoteConfig{}.tau);

  std::size_t n = repaired.size();
  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) root[i] = i;
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (repaired.lookup(i, j)) root[find(i)] = find(j);

  std::vector<int> mass(n, 0);
  std::vector<std::size_t> first_seen(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = find(i);
    mass[r] += uc.counts.at(uc.uniques[i]);
    first_seen[r] = std::min(first_seen[r], i);
  }
  std::size_t winner = n;
  for (std::size_t r = 0; r < n; ++r) {
    if (first_seen[r] == n) continue;  // not a root
    if (winner == n || mass[r] > mass[winner] ||
        (mass[r] == mass[winner] && first_seen[r] < first_seen[winner]))
      winner = r;
  }

  std::unordered_map<std::string, std::size_t> unique_index;
  for (std::size_t i = 0; i < n; ++i) unique_index[uc.uniques[i]] = i;
  for (std::size_t s = 0; s < sampled_answers.size(); ++s) {
    if (!sampled_correct[s]) continue;
    if (find(unique_index.at(sampled_answers[s])) == winner) return true;
  }
  return false;
}

void validate_majority_args(std::size_t n_answers, std::size_t n_correct,
                            int k) {
  if (n_answers == 0) throw std::invalid_argument("no answers");
  if (n_answers != n_correct)
    throw std::invalid_argument("answers and correctness sizes differ");
  if (k < 1 || static_cast<std::size_t>(k) > n_answers)
    throw std::invalid_argument("k must satisfy 1 <= k <= n");
}

}  // namespace

double mean_at_k(const std::vector<bool>& correctness) {
  if (correctness.empty()) throw std::invalid_argument("no samples");
  std::size_t hits = 0;
  for (bool c : correctness) hits += c;
  return static_cast<double>(hits) / static_cast<double>(correctness.size());
}

advantage::Rational pass_at_k_exact(int n, int c, int k) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (c < 0 || c > n) throw std::invalid_argument("c must satisfy 0 <= c <= n");
  if (k < 1 || k > n) throw std::invalid_argument("k must satisfy 1 <= k <= n");
  return 1 - Rational(advantage::binomial(n - c, k), advantage::binomial(n, k));
}

double pass_at_k_estimate(int n, int c, int k) {
  return pass_at_k_exact(n, c, k).convert_to<double>();
}

double majority_at_k(const std::vector<std::string>& answers,
                     const std::vector<bool>& correctness, int k,
                     const vote::EquivalenceOracle& oracle, std::uint64_t seed,
                     int trials) {
  validate_majority_args(answers.size(), correctness.size(), k);
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  std::size_t n = answers.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  long long hits = 0;
  for (int t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // Partial Fisher-Yates; bounded_index keeps the draw platform-stable.
    std::vector<std::string> sampled;
    std::vector<bool> sampled_correct;
    for (int i = 0; i < k; ++i) {
      std::size_t j = i + bounded_index(rng(), n - i);
      std::swap(idx[i], idx[j]);
      sampled.push_back(answers[idx[i]]);
      sampled_correct.push_back(correctness[idx[i]]);
    }
    hits += plurality_trial(sampled, sampled_correct, oracle);
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double majority_at_k_exhaustive(const std::vector<std::string>& answers,
                                const std::vector<bool>& correctness, int k,
                                const vote::EquivalenceOracle& oracle) {
  validate_majority_args(answers.size(), correctness.size(), k);
  int n = static_cast<int>(answers.size());
  if (n > 12)
    throw std::invalid_argument("exhaustive majority@k is limited to n <= 12");
  std::vector<int> combo(k);
  for (int i = 0; i < k; ++i) combo[i] = i;
  long long hits = 0, subsets = 0;
  while (true) {
    std::vector<std::string> sampled;
    std::vector<bool> sampled_correct;
    for (int i : combo) {
      sampled.push_back(answers[i]);
      sampled_correct.push_back(correctness[i]);
    }
    hits += plurality_trial(sampled, sampled_correct, oracle);
    ++subsets;
    int slot = k - 1;
    while (slot >= 0 && combo[slot] == n - k + slot) --slot;
    if (slot < 0) break;
    ++combo[slot];
    for (int j = slot + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(subsets);
}

MetaEvalReport verifier_meta_eval(const std::vector<bool>& predicted,
                                  const std::vector<bool>& gold) {
  if (predicted.empty()) throw std::invalid_argument("no judgements");
  if (predicted.size() != gold.size())
    throw std::invalid_argument("predicted and gold sizes differ");
  MetaEvalReport r;
  r.n = static_cast<int>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && gold[i]) ++r.tp;
    else if (predicted[i] && !gold[i]) ++r.fp;
    else if (!predicted[i] && gold[i]) ++r.fn;
    else ++r.tn;
  }
  r.agreement_pct = 100.0 * static_cast<double>(r.tp + r.tn) / r.n;
  if (r.tp + r.fp > 0)
    r.precision_pct = 100.0 * static_cast<double>(r.tp) /
                      static_cast<double>(r.tp + r.fp);
  if (r.tp + r.fn > 0)
    r.recall_pct = 100.0 * static_cast<double>(r.tp) /
                   static_cast<double>(r.tp + r.fn);
  if (r.precision_pct && r.recall_pct && *r.precision_pct + *r.recall_pct > 0)
    r.f1_pct = 2.0 * *r.precision_pct * *r.recall_pct /
               (*r.precision_pct + *r.recall_pct);
  return r;
}

}  // namespace aggrl::metrics
