#pragma once

// Prompt templates, kept as data assets with render helpers. Every render
// function embeds its arguments verbatim: no escaping, trimming, or
// re-encoding, so a caller can locate each input byte-for-byte inside the
// rendered prompt. Template text changes must bump the matching *_version
// constant; downstream scripted tables key on the rendered bytes.

#include <string>
#include <string_view>
#include <vector>

namespace aggrl::prompts {

inline constexpr std::string_view kPointwiseVersion = "pointwise/v1";
inline constexpr std::string_view kPairwiseVersion = "pairwise/v1";
inline constexpr std::string_view kListwiseVersion = "listwise/v1";
inline constexpr std::string_view kEquivalenceVersion = "equivalence/v1";
inline constexpr std::string_view kAggregationVersion = "aggregation/v1";

// Pointwise judge: binary <score> verdict. The reference-based variant adds
// a [Reference Answer] section as extra context; the judge still grades the
// whole response.
std::string render_pointwise(const std::string& instruction,
                             const std::string& response);
std::string render_pointwise_with_reference(const std::string& instruction,
                                            const std::string& reference,
                                            const std::string& response);

// Pairwise judge: <score_A>/<score_B>, each 0..10 at 0.1 precision.
std::string render_pairwise(const std::string& instruction,
                            const std::string& response_a,
                            const std::string& response_b);

// K-wise generalization of the pairwise template: <score_1>..<score_K>.
// Requires at least 3 responses (use render_pairwise for 2).
std::string render_listwise(const std::string& instruction,
                            const std::vector<std::string>& responses);

// Equivalence verifier: verdict vocabulary is exactly "Equivalent" /
// "Not Equivalent". Prediction-vs-prediction checks reuse this template
// with one prediction standing in the reference slot.
std::string render_equivalence(const std::string& problem,
                               const std::string& reference,
                               const std::string& prediction);

// Aggregation prompt: the problem, then every candidate on its own line in
// pool order, then the divider, then the review instruction.
std::string render_aggregation(const std::string& problem,
                               const std::vector<std::string>& candidates);

// First line of the divider in the aggregation prompt; exposed for tools
// that need to recognize aggregation prompts (e.g. the echo backend).
inline constexpr std::string_view kAggregationHead = "Given the following problem:";
inline constexpr std::string_view kAggregationAttempts = "and these solution attempts:";
inline constexpr std::string_view kAggregationDivider = "=========================";

}  // namespace aggrl::prompts
