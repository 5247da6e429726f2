#include "aggrl/equivalence_vote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "aggrl/common.hpp"

namespace aggrl::vote {

namespace {

// Union-find with path halving; small n means no rank tracking needed.
struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

bool shorter_then_lex(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::string pick_representative(const std::vector<std::string>& members) {
  if (members.size() <= 2) {
    return *std::min_element(members.begin(), members.end(), shorter_then_lex);
  }
  // Median length, kept as 2*median so even-sized groups stay in integers.
  std::vector<std::size_t> lens;
  lens.reserve(members.size());
  for (const auto& s : members) lens.push_back(s.size());
  std::sort(lens.begin(), lens.end());
  std::size_t mid = lens.size() / 2;
  std::size_t twice_median =
      lens.size() % 2 ? 2 * lens[mid] : lens[mid - 1] + lens[mid];
  auto dist = [&](const std::string& s) {
    std::size_t twice_len = 2 * s.size();
    return twice_len > twice_median ? twice_len - twice_median
                                    : twice_median - twice_len;
  };
  return *std::min_element(members.begin(), members.end(),
                           [&](const std::string& a, const std::string& b) {
                             auto da = dist(a), db = dist(b);
                             if (da != db) return da < db;
                             return shorter_then_lex(a, b);
                           });
}

}  // namespace

EquivalenceMatrix::EquivalenceMatrix(std::vector<std::string> uniques)
    : uniques_(std::move(uniques)),
      cells_(uniques_.size() * (uniques_.size() - 1) / 2, 0) {}

std::size_t EquivalenceMatrix::cell_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  std::size_t n = uniques_.size();
  if (j >= n || i == j) throw std::invalid_argument("matrix index out of range");
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

bool EquivalenceMatrix::lookup(std::size_t i, std::size_t j) const {
  if (i == j) {
    if (i >= uniques_.size()) throw std::invalid_argument("matrix index out of range");
    return true;
  }
  return cells_[cell_index(i, j)] != 0;
}

void EquivalenceMatrix::set(std::size_t i, std::size_t j, bool value) {
  cells_[cell_index(i, j)] = value ? 1 : 0;
}

UniqueCounts unique_with_counts(const std::vector<std::string>& predictions) {
  UniqueCounts out;
  for (const auto& p : predictions) {
    auto [it, inserted] = out.counts.try_emplace(p, 0);
    if (inserted) out.uniques.push_back(p);
    ++it->second;
  }
  return out;
}

EquivalenceMatrix build_matrix(std::vector<std::string> uniques,
                               const EquivalenceOracle& oracle) {
  EquivalenceMatrix m(std::move(uniques));
  std::size_t n = m.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m.set(i, j, oracle(m.uniques()[i], m.uniques()[j]));
    }
  }
  return m;
}

double agreement(const EquivalenceMatrix& m, std::size_t i, std::size_t j) {
  std::size_t n = m.size();
  if (n <= 2) throw std::invalid_argument("agreement needs at least one witness");
  if (i == j) throw std::invalid_argument("agreement of a pair, not a diagonal");
  std::size_t matches = 0;
  for (std::size_t w = 0; w < n; ++w) {
    if (w == i || w == j) continue;
    if (m.lookup(i, w) == m.lookup(j, w)) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(n - 2);
}

EquivalenceMatrix repair_transitivity(const EquivalenceMatrix& m, double tau) {
  EquivalenceMatrix repaired = m;
  std::size_t n = m.size();
  if (n <= 2) return repaired;
  // All agreements are measured against the frozen input matrix; flips land
  // in the copy, so no flip can influence another pair's agreement.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m.lookup(i, j) && agreement(m, i, j) < tau) {
        repaired.set(i, j, false);
      }
    }
  }
  return repaired;
}

std::vector<VoteGroup> group_by_equivalence(
    const EquivalenceMatrix& m,
    const std::unordered_map<std::string, int>& counts) {
  std::size_t n = m.size();
  DisjointSet dsu(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m.lookup(i, j)) dsu.unite(i, j);
    }
  }
  // First-occurrence order inside each group falls out of scanning uniques
  // in index order.
  std::vector<std::vector<std::size_t>> buckets(n);
  for (std::size_t i = 0; i < n; ++i) buckets[dsu.find(i)].push_back(i);

  std::vector<VoteGroup> groups;
  for (const auto& bucket : buckets) {
    if (bucket.empty()) continue;
    VoteGroup g;
    for (std::size_t idx : bucket) {
      const std::string& s = m.uniques()[idx];
      g.members.push_back(s);
      auto it = counts.find(s);
      g.vote_mass += it == counts.end() ? 0 : it->second;
    }
    g.representative = pick_representative(g.members);
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [](const VoteGroup& a, const VoteGroup& b) {
              if (a.vote_mass != b.vote_mass) return a.vote_mass > b.vote_mass;
              return a.representative < b.representative;
            });
  return groups;
}

MajorityOutcome decide_majority(const std::vector<VoteGroup>& groups,
                                double theta, std::size_t total_predictions) {
  if (groups.empty()) return NoValidPredictions{};
  const VoteGroup& top = groups.front();
  // The tiny slack keeps ceil() from inventing an extra vote when
  // theta * total lands a rounding error above an exact integer.
  int required = static_cast<int>(
      std::ceil(theta * static_cast<double>(total_predictions) - 1e-9));
  if (top.vote_mass >= required) return Majority{top.representative, top.vote_mass};
  return NoMajority{top.vote_mass};
}

VoteResult conservative_majority_vote(const PredictionSet& set,
                                      const EquivalenceOracle& oracle,
                                      const VoteConfig& config) {
  if (config.tau < 0.0 || config.tau > 1.0)
    throw std::invalid_argument("tau must be in [0, 1]");
  if (config.theta <= 0.0 || config.theta > 1.0)
    throw std::invalid_argument("theta must be in (0, 1]");

  VoteResult result;
  if (set.predictions.empty()) {
    result.outcome = NoValidPredictions{};
    return result;
  }
  UniqueCounts uc = unique_with_counts(set.predictions);
  EquivalenceMatrix raw;
  try {
    raw = build_matrix(uc.uniques, oracle);
  } catch (const TransportExhausted&) {
    // A dead backend is not a per-problem condition; callers iterating many
    // problems need to see it as-is so they can stop instead of retrying.
    throw;
  } catch (const std::exception& e) {
    throw VoteError(set.problem_id, e.what());
  }
  result.matrix = repair_transitivity(raw, config.tau);
  result.groups = group_by_equivalence(result.matrix, uc.counts);
  result.outcome =
      decide_majority(result.groups, config.theta, set.predictions.size());
  return result;
}

}  // namespace aggrl::vote
