#include "aggrl/advantage.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aggrl::advantage {

namespace {

void require_non_empty(const std::vector<double>& rewards) {
  if (rewards.empty()) throw std::invalid_argument("reward group is empty");
}

void require_finite(const std::vector<double>& rewards) {
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (!std::isfinite(rewards[i]))
      throw std::invalid_argument("reward at index " + std::to_string(i) +
                                  " is not finite");
  }
}

void require_binary(const std::vector<double>& rewards) {
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (rewards[i] != 0.0 && rewards[i] != 1.0)
      throw std::invalid_argument("reward at index " + std::to_string(i) +
                                  " is not binary (got " +
                                  std::to_string(rewards[i]) + ")");
  }
}

Rational rational_mean(const std::vector<double>& rewards) {
  Rational sum = 0;
  for (double r : rewards) sum += Rational(r);  // every double is rational
  return sum / static_cast<long long>(rewards.size());
}

Rational rational_variance(const std::vector<double>& rewards,
                           const Rational& mu) {
  Rational acc = 0;
  for (double r : rewards) {
    Rational d = Rational(r) - mu;
    acc += d * d;
  }
  return acc / static_cast<long long>(rewards.size());
}

}  // namespace

GroupStats group_stats(const std::vector<double>& rewards) {
  require_non_empty(rewards);
  require_finite(rewards);
  Rational mu = rational_mean(rewards);
  Rational var = rational_variance(rewards, mu);
  GroupStats s;
  s.mu = mu.convert_to<double>();
  s.sigma = std::sqrt(var.convert_to<double>());
  return s;
}

std::vector<Rational> grpo_advantages_exact(const std::vector<double>& rewards) {
  require_non_empty(rewards);
  require_finite(rewards);
  Rational mu = rational_mean(rewards);
  std::vector<Rational> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back(Rational(r) - mu);
  return out;
}

AdvantageAssignment grpo_advantages(const std::vector<double>& rewards,
                                    bool normalize_by_std,
                                    double sigma_epsilon) {
  std::vector<Rational> exact = grpo_advantages_exact(rewards);
  GroupStats s = group_stats(rewards);
  AdvantageAssignment a;
  a.mu = s.mu;
  a.sigma = s.sigma;
  a.advantages.reserve(exact.size());
  if (normalize_by_std && s.sigma == 0.0) {
    a.advantages.assign(exact.size(), 0.0);  // uniform group carries no signal
    return a;
  }
  double divisor = normalize_by_std ? std::max(s.sigma, sigma_epsilon) : 1.0;
  for (const Rational& r : exact)
    a.advantages.push_back(r.convert_to<double>() / divisor);
  return a;
}

BigInt binomial(long long n, long long r) {
  if (r < 0 || r > n || n < 0) return 0;
  if (r > n - r) r = n - r;
  BigInt acc = 1;
  for (long long i = 1; i <= r; ++i) {
    acc *= (n - r + i);
    acc /= i;  // exact: product of i consecutive integers divides by i!
  }
  return acc;
}

Rational passk_offset_exact(int N, int N_incorrect, int k) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  if (k < 1 || k > N) throw std::invalid_argument("k must satisfy 1 <= k <= N");
  if (N_incorrect < 1 || N_incorrect > N)
    throw std::invalid_argument("N_incorrect must satisfy 1 <= N_incorrect <= N");
  BigInt num = binomial(N_incorrect - 1, k - 1);
  BigInt den = binomial(N - 1, k - 1);
  return Rational(num, den);  // den >= 1 since k - 1 <= N - 1
}

double passk_offset(int N, int N_incorrect, int k) {
  return passk_offset_exact(N, N_incorrect, k).convert_to<double>();
}

std::vector<Rational> passk_advantages_exact(const std::vector<double>& rewards,
                                             int k) {
  require_non_empty(rewards);
  require_finite(rewards);
  require_binary(rewards);
  int N = static_cast<int>(rewards.size());
  if (k < 1 || k > N) throw std::invalid_argument("k must satisfy 1 <= k <= N");
  int n_incorrect = 0;
  for (double r : rewards) n_incorrect += r == 0.0;

  Rational mu = rational_mean(rewards);
  Rational a_correct = 1 - mu;
  Rational a_incorrect = 0;
  if (n_incorrect > 0)
    a_incorrect = a_correct - passk_offset_exact(N, n_incorrect, k);

  std::vector<Rational> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back(r == 1.0 ? a_correct : a_incorrect);
  return out;
}

AdvantageAssignment passk_advantages(const std::vector<double>& rewards,
                                     const AdvantageConfig& config) {
  std::vector<Rational> exact = passk_advantages_exact(rewards, config.k);
  GroupStats s = group_stats(rewards);
  int n_incorrect = 0;
  for (double r : rewards) n_incorrect += r == 0.0;

  AdvantageAssignment a;
  a.mu = s.mu;
  a.sigma = s.sigma;
  if (n_incorrect > 0)
    a.offset = passk_offset(static_cast<int>(rewards.size()), n_incorrect,
                            config.k);
  if (config.normalize_by_std && s.sigma == 0.0) {
    a.advantages.assign(exact.size(), 0.0);
    return a;
  }
  double divisor =
      config.normalize_by_std ? std::max(s.sigma, config.sigma_epsilon) : 1.0;
  for (const Rational& r : exact)
    a.advantages.push_back(r.convert_to<double>() / divisor);
  return a;
}

}  // namespace aggrl::advantage
