#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace chunkfb::metrics {

inline constexpr std::size_t kMaxShiftSize = 10;
inline constexpr std::size_t kMaxShiftDistance = 10;

/// Word-level Levenshtein distance (insertions, deletions, substitutions).
template <typename Token>
std::size_t edit_distance(std::span<const Token> hyp, std::span<const Token> ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

struct TerResult {
  std::size_t shifts = 0;
  std::size_t edits = 0;  // shifts plus remaining edit distance
  std::size_t ref_length = 0;

  double percent() const {
    return ref_length == 0 ? (edits == 0 ? 0.0 : 100.0)
                           : 100.0 * static_cast<double>(edits) / static_cast<double>(ref_length);
  }
};

namespace detail {

template <typename Token>
bool occurs_in(std::span<const Token> block, std::span<const Token> ref) {
  if (block.size() > ref.size()) return false;
  return std::search(ref.begin(), ref.end(), block.begin(), block.end()) != ref.end();
}

}  // namespace detail

/// Greedy TER: repeatedly apply the block shift that most reduces the edit
/// distance (blocks must occur in the reference; size and distance capped),
/// then add the remaining edit distance.
template <typename Token>
TerResult ter_edits(std::span<const Token> hyp_in, std::span<const Token> ref) {
  std::vector<Token> hyp(hyp_in.begin(), hyp_in.end());
  TerResult result;
  result.ref_length = ref.size();
  std::size_t current = edit_distance<Token>(hyp, ref);

  while (current > 0) {
    std::size_t best_cost = current;
    std::vector<Token> best_hyp;
    for (std::size_t len = std::min(kMaxShiftSize, hyp.size()); len >= 1; --len) {
      for (std::size_t start = 0; start + len <= hyp.size(); ++start) {
        const std::span<const Token> block(hyp.data() + start, len);
        if (!detail::occurs_in<Token>(block, ref)) continue;
        std::vector<Token> rest;
        rest.reserve(hyp.size() - len);
        rest.insert(rest.end(), hyp.begin(), hyp.begin() + static_cast<std::ptrdiff_t>(start));
        rest.insert(rest.end(), hyp.begin() + static_cast<std::ptrdiff_t>(start + len), hyp.end());
        const std::size_t lo = start > kMaxShiftDistance ? start - kMaxShiftDistance : 0;
        const std::size_t hi = std::min(rest.size(), start + kMaxShiftDistance);
        for (std::size_t dest = lo; dest <= hi; ++dest) {
          if (dest == start) continue;
          std::vector<Token> moved;
          moved.reserve(hyp.size());
          moved.insert(moved.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(dest));
          moved.insert(moved.end(), block.begin(), block.end());
          moved.insert(moved.end(), rest.begin() + static_cast<std::ptrdiff_t>(dest), rest.end());
          const std::size_t cost = edit_distance<Token>(moved, ref);
          if (cost < best_cost) {
            best_cost = cost;
            best_hyp = std::move(moved);
          }
        }
      }
    }
    if (best_hyp.empty()) break;
    hyp = std::move(best_hyp);
    current = best_cost;
    ++result.shifts;
  }
  result.edits = result.shifts + current;
  return result;
}

template <typename Token>
TerResult ter_edits(const std::vector<Token>& hyp, const std::vector<Token>& ref) {
  return ter_edits(std::span<const Token>(hyp), std::span<const Token>(ref));
}

/// TER percentage of one sentence pair over whitespace tokens.
double ter(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, bool lowercase = true);

/// Corpus TER: total edits over total reference length, in percent.
double corpus_ter(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs, bool lowercase = true);

}  // namespace chunkfb::metrics
