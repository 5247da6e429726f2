#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aggrl {

// Raised when a backend call fails in a way that is not worth retrying
// (missing script entry, unparseable response body, HTTP 4xx, ...).
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the retry budget for a remote call is exhausted. The message
// carries one line per attempt so the failure is diagnosable from logs.
class TransportExhausted : public BackendError {
 public:
  explicit TransportExhausted(const std::string& what) : BackendError(what) {}
};

// Wraps any verifier failure that occurred while voting on one problem, so
// callers processing many problems can report which one failed.
class VoteError : public std::runtime_error {
 public:
  VoteError(std::string problem_id, const std::string& what)
      : std::runtime_error("problem '" + problem_id + "': " + what),
        problem_id_(std::move(problem_id)) {}
  const std::string& problem_id() const { return problem_id_; }

 private:
  std::string problem_id_;
};

// FNV-1a 64-bit. Used to key scripted-backend tables by prompt.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data);

std::string trim(std::string_view s);

// Draws from [0, n) via multiply-shift on a raw 64-bit word. We avoid
// std::uniform_int_distribution because its mapping is implementation
// defined and we promise byte-identical outputs across platforms.
inline std::size_t bounded_index(std::uint64_t word, std::size_t n) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(word) * n) >> 64);
}

}  // namespace aggrl
