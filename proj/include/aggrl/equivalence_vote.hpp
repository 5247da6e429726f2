#pragma once

// Conservative equivalence checking for majority voting.
//
// Plain string-count voting under-merges: "1/2" and "0.5" split the vote.
// Handing the merge decision to a model verifier over-merges instead, because
// one spurious "equivalent" verdict chains distinct answers into one group.
// The pipeline here votes over verifier-defined equivalence classes but
// repairs the verifier matrix first: a positive pair whose rows disagree on
// too many third-party witnesses is demoted to "not equivalent". Flips only
// ever go True -> False, so the repaired relation is never more permissive
// than the raw one.

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace aggrl::vote {

struct PredictionSet {
  std::string problem_id;
  std::vector<std::string> predictions;  // empty/blank strings are valid
};

struct VoteConfig {
  double tau = 0.6;        // agreement threshold for keeping a True entry
  double theta = 5.0 / 8;  // majority needs >= ceil(theta * |predictions|)
};

// Answers `are these two prediction strings the same answer?`. Implementations
// may call out to a model; they signal failure by throwing.
using EquivalenceOracle =
    std::function<bool(const std::string&, const std::string&)>;

// Symmetric boolean matrix over the unique predictions. Only the strict upper
// triangle is stored (n*(n-1)/2 entries); lookup(i,i) is always true.
class EquivalenceMatrix {
 public:
  EquivalenceMatrix() = default;
  explicit EquivalenceMatrix(std::vector<std::string> uniques);

  std::size_t size() const { return uniques_.size(); }
  const std::vector<std::string>& uniques() const { return uniques_; }

  bool lookup(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, bool value);  // i != j required

  std::size_t stored_entries() const { return cells_.size(); }

 private:
  std::size_t cell_index(std::size_t i, std::size_t j) const;
  std::vector<std::string> uniques_;
  std::vector<char> cells_;
};

struct VoteGroup {
  std::vector<std::string> members;  // unique strings, first-occurrence order
  int vote_mass = 0;                 // total multiplicity across members
  std::string representative;
};

struct Majority {
  std::string answer;
  int count = 0;  // vote mass of the winning group
};
struct NoMajority {
  int top_count = 0;  // vote mass of the largest group, for diagnostics
};
struct NoValidPredictions {};

using MajorityOutcome = std::variant<Majority, NoMajority, NoValidPredictions>;

struct VoteResult {
  MajorityOutcome outcome;
  EquivalenceMatrix matrix;  // post-repair
  std::vector<VoteGroup> groups;
};

// Uniques keep first-occurrence order; counts carry the multiplicities.
struct UniqueCounts {
  std::vector<std::string> uniques;
  std::unordered_map<std::string, int> counts;
};
UniqueCounts unique_with_counts(const std::vector<std::string>& predictions);

// Queries the oracle once per unordered pair, i < j in row-major order.
// Oracle exceptions propagate to the caller.
EquivalenceMatrix build_matrix(std::vector<std::string> uniques,
                               const EquivalenceOracle& oracle);

// Fraction of witnesses w (excluding i and j) on which rows i and j agree:
// mean over w of [V(i,w) == V(j,w)]. Requires size() > 2 so at least one
// witness exists.
double agreement(const EquivalenceMatrix& m, std::size_t i, std::size_t j);

// Flips every True entry whose agreement falls below tau. All agreement
// values are computed against the input matrix and the flips applied as one
// batch, so the result does not depend on any scan order. No-op when
// size() <= 2 (no witnesses to consult).
EquivalenceMatrix repair_transitivity(const EquivalenceMatrix& m, double tau);

// Union-find over the True entries. Within a group the representative is the
// shortest member when the group has at most two members, otherwise the
// member whose length is closest to the group's median length; ties prefer
// the shorter then lexicographically smaller string. Groups come back sorted
// by descending vote mass, then ascending representative.
std::vector<VoteGroup> group_by_equivalence(
    const EquivalenceMatrix& m, const std::unordered_map<std::string, int>& counts);

// Majority iff the top group's mass reaches ceil(theta * total_predictions).
// Ties on mass were already broken toward the lexicographically smallest
// representative by the group ordering.
MajorityOutcome decide_majority(const std::vector<VoteGroup>& groups,
                                double theta, std::size_t total_predictions);

// Full pipeline: unique -> matrix -> repair -> group -> decide. A throwing
// oracle aborts the whole vote; the error is rethrown as VoteError tagged
// with the problem_id (no silent fallback for partially-built matrices).
// TransportExhausted passes through unchanged: a dead backend outlives any
// one problem.
VoteResult conservative_majority_vote(const PredictionSet& set,
                                      const EquivalenceOracle& oracle,
                                      const VoteConfig& config = {});

}  // namespace aggrl::vote
