#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <random>

#include "aggrl/advantage.hpp"

using namespace aggrl::advantage;

namespace {

// Reference oracle for the pass@k offset: from the viewpoint of one
// incorrect rollout, enumerate every (k-1)-subset of the other N-1 rollouts
// and count the subsets with no correct rollout. The offset must equal
// count / total exactly.
Rational offset_by_enumeration(int N, int N_incorrect, int k) {
  // others: N_incorrect - 1 incorrect, rest correct
  std::vector<bool> incorrect(N - 1, false);
  for (int i = 0; i < N_incorrect - 1; ++i) incorrect[i] = true;
  int r = k - 1;
  long long total = 0, all_incorrect = 0;
  std::vector<int> combo(r);
  for (int i = 0; i < r; ++i) combo[i] = i;
  if (r == 0) return Rational(1);  // the singleton {self} has no correct member
  if (r > N - 1) return Rational(0);
  while (true) {
    ++total;
    bool bad = true;
    for (int i : combo) bad = bad && incorrect[i];
    all_incorrect += bad;
    int slot = r - 1;
    while (slot >= 0 && combo[slot] == (N - 1) - r + slot) --slot;
    if (slot < 0) break;
    ++combo[slot];
    for (int j = slot + 1; j < r; ++j) combo[j] = combo[j - 1] + 1;
  }
  return Rational(all_incorrect, total);
}

std::vector<double> random_binary_group(std::mt19937_64& rng, int max_n) {
  int n = 1 + static_cast<int>(rng() % max_n);
  std::vector<double> rewards(n);
  for (auto& r : rewards) r = (rng() & 1) ? 1.0 : 0.0;
  return rewards;
}

}  // namespace

TEST_CASE("group_stats basics") {
  GroupStats s = group_stats({1.0, 0.0, 0.0, 1.0});
  CHECK(s.mu == doctest::Approx(0.5));
  CHECK(s.sigma == doctest::Approx(0.5));

  GroupStats uniform = group_stats({2.5, 2.5, 2.5});
  CHECK(uniform.mu == doctest::Approx(2.5));
  CHECK(uniform.sigma == 0.0);

  CHECK_THROWS_AS(group_stats({}), std::invalid_argument);
  CHECK_THROWS_AS(group_stats({1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("grpo advantages center the group") {
  auto a = grpo_advantages({1.0, 0.0, 0.0, 1.0});
  CHECK(a.advantages == std::vector<double>{0.5, -0.5, -0.5, 0.5});
  CHECK_FALSE(a.offset.has_value());

  auto norm = grpo_advantages({1.0, 0.0, 0.0, 1.0}, true);
  CHECK(norm.advantages == std::vector<double>{1.0, -1.0, -1.0, 1.0});
}

TEST_CASE("grpo normalization zeroes a zero-variance group") {
  auto a = grpo_advantages({3.0, 3.0, 3.0}, true);
  CHECK(a.advantages == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(a.sigma == 0.0);
  // unnormalized keeps the (zero) residuals too
  auto u = grpo_advantages({3.0, 3.0, 3.0}, false);
  CHECK(u.advantages == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("grpo advantages sum to zero") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng() % 16);
    std::vector<double> rewards(n);
    for (auto& r : rewards)
      r = static_cast<double>(rng() % 1000) / 250.0 - 2.0;
    Rational sum = 0;
    for (const Rational& a : grpo_advantages_exact(rewards)) sum += a;
    CHECK(sum == 0);
  }
}

TEST_CASE("binomial handles edge regions") {
  CHECK(binomial(0, 0) == 1);
  CHECK(binomial(5, 0) == 1);
  CHECK(binomial(5, 5) == 1);
  CHECK(binomial(5, 6) == 0);
  CHECK(binomial(0, 1) == 0);
  CHECK(binomial(7, 3) == 35);
  // stays exact where doubles would have rounded long ago
  CHECK(binomial(64, 32) == BigInt("1832624140942590534"));
  CHECK(binomial(100, 50) == BigInt("100891344545564193334812497256"));
}

TEST_CASE("passk_offset known values") {
  // C(5,3)/C(7,3) = 10/35 = 2/7
  CHECK(passk_offset_exact(8, 6, 4) == Rational(2, 7));
  CHECK(passk_offset(8, 6, 4) == doctest::Approx(2.0 / 7.0));
  // k=1 always gives 1: C(x,0)/C(y,0)
  CHECK(passk_offset_exact(8, 3, 1) == 1);
  // k-1 exceeds the incorrect pool: numerator vanishes
  CHECK(passk_offset_exact(4, 1, 2) == 0);
  // everything incorrect: ratio is 1 for every k
  for (int k = 1; k <= 6; ++k) CHECK(passk_offset_exact(6, 6, k) == 1);
}

TEST_CASE("passk_offset domain errors") {
  CHECK_THROWS_AS(passk_offset(8, 6, 0), std::invalid_argument);
  CHECK_THROWS_AS(passk_offset(8, 6, 9), std::invalid_argument);
  CHECK_THROWS_AS(passk_offset(8, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(passk_offset(8, 9, 4), std::invalid_argument);
  CHECK_THROWS_AS(passk_offset(0, 0, 1), std::invalid_argument);
}

TEST_CASE("passk_offset equals subset enumeration for every small case") {
  for (int N = 1; N <= 12; ++N)
    for (int n_inc = 1; n_inc <= N; ++n_inc)
      for (int k = 1; k <= N; ++k)
        CHECK(passk_offset_exact(N, n_inc, k) ==
              offset_by_enumeration(N, n_inc, k));
}

TEST_CASE("passk_offset monotonicity") {
  for (int N = 2; N <= 10; ++N) {
    for (int n_inc = 1; n_inc <= N; ++n_inc) {
      for (int k = 2; k <= N; ++k) {
        // non-increasing in k
        CHECK(passk_offset_exact(N, n_inc, k) <=
              passk_offset_exact(N, n_inc, k - 1));
        // non-decreasing in the incorrect count
        if (n_inc > 1)
          CHECK(passk_offset_exact(N, n_inc, k) >=
                passk_offset_exact(N, n_inc - 1, k));
      }
    }
  }
}

TEST_CASE("passk advantages worked example") {
  AdvantageConfig config;
  config.k = 2;
  auto a = passk_advantages({1.0, 0.0, 0.0, 1.0}, config);
  // mu = 1/2, offset = C(1,1)/C(3,1) = 1/3, so incorrect get 1/2 - 1/3 = 1/6
  CHECK(a.advantages[0] == 0.5);
  CHECK(a.advantages[3] == 0.5);
  CHECK(a.advantages[1] == doctest::Approx(1.0 / 6.0));
  CHECK(a.advantages[1] == a.advantages[2]);
  REQUIRE(a.offset.has_value());
  CHECK(*a.offset == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("passk advantages degenerate groups") {
  AdvantageConfig config;
  config.k = 2;
  // nothing incorrect: mu = 1, everyone gets 1 - mu = 0, no offset
  auto all_good = passk_advantages({1.0, 1.0, 1.0}, config);
  CHECK(all_good.advantages == std::vector<double>{0.0, 0.0, 0.0});
  CHECK_FALSE(all_good.offset.has_value());
  // nothing correct: offset is 1 and 1 - mu - 1 = 0 for everyone
  auto all_bad = passk_advantages({0.0, 0.0, 0.0}, config);
  CHECK(all_bad.advantages == std::vector<double>{0.0, 0.0, 0.0});
  REQUIRE(all_bad.offset.has_value());
  CHECK(*all_bad.offset == 1.0);
}

TEST_CASE("passk advantages reject non-binary rewards by index") {
  AdvantageConfig config;
  config.k = 2;
  try {
    passk_advantages({1.0, 0.5, 0.0}, config);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("passk advantages validate k") {
  AdvantageConfig config;
  config.k = 0;
  CHECK_THROWS_AS(passk_advantages({1.0, 0.0}, config), std::invalid_argument);
  config.k = 3;
  CHECK_THROWS_AS(passk_advantages({1.0, 0.0}, config), std::invalid_argument);
}

TEST_CASE("k=1 reduces to the plain centered advantages, bit for bit") {
  std::mt19937_64 rng(11);
  AdvantageConfig config;
  config.k = 1;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> rewards = random_binary_group(rng, 32);
    auto passk = passk_advantages(rewards, config);
    auto grpo = grpo_advantages(rewards, false);
    REQUIRE(passk.advantages.size() == grpo.advantages.size());
    CHECK(std::memcmp(passk.advantages.data(), grpo.advantages.data(),
                      sizeof(double) * grpo.advantages.size()) == 0);
  }
}

TEST_CASE("incorrect never out-earns correct") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> rewards = random_binary_group(rng, 16);
    int n = static_cast<int>(rewards.size());
    AdvantageConfig config;
    config.k = 1 + static_cast<int>(rng() % n);
    auto exact = passk_advantages_exact(rewards, config.k);
    Rational a_correct, a_incorrect;
    bool saw_correct = false, saw_incorrect = false;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      if (rewards[i] == 1.0) { a_correct = exact[i]; saw_correct = true; }
      else { a_incorrect = exact[i]; saw_incorrect = true; }
    }
    if (saw_correct && saw_incorrect) CHECK(a_incorrect <= a_correct);
  }
}

TEST_CASE("passk advantages are permutation-equivariant") {
  std::vector<double> rewards = {1, 0, 0, 1, 0, 1, 0, 0};
  AdvantageConfig config;
  config.k = 3;
  auto base = passk_advantages(rewards, config);
  std::vector<double> shuffled = {0, 1, 0, 0, 1, 0, 0, 1};
  auto other = passk_advantages(shuffled, config);
  for (std::size_t i = 0; i < rewards.size(); ++i)
    for (std::size_t j = 0; j < shuffled.size(); ++j)
      if (rewards[i] == shuffled[j])
        CHECK(base.advantages[i] == other.advantages[j]);
}

TEST_CASE("passk normalization matches grpo's shape") {
  AdvantageConfig config;
  config.k = 2;
  config.normalize_by_std = true;
  auto a = passk_advantages({1.0, 0.0, 0.0, 1.0}, config);
  // sigma = 1/2, so the unnormalized [.5, 1/6, 1/6, .5] doubles
  CHECK(a.advantages[0] == doctest::Approx(1.0));
  CHECK(a.advantages[1] == doctest::Approx(1.0 / 3.0));

  auto flat = passk_advantages({1.0, 1.0}, config);
  CHECK(flat.advantages == std::vector<double>{0.0, 0.0});
}
