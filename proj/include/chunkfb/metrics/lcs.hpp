#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chunkfb::metrics {

struct CommonRun {
  std::size_t start_a = 0;
  std::size_t start_b = 0;
  std::size_t length = 0;

  bool operator==(const CommonRun&) const = default;
};

/// Longest contiguous run shared by `a` and `b`. Ties go to the smallest
/// start in `a`, then the smallest start in `b`. O(|a|·|b|) time, O(|b|) memory.
template <typename Token>
CommonRun longest_common_substring(std::span<const Token> a, std::span<const Token> b) {
  CommonRun best;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      const std::size_t len = cur[j];
      if (len == 0) continue;
      const std::size_t sa = i - len, sb = j - len;
      if (len > best.length || (len == best.length && (sa < best.start_a || (sa == best.start_a && sb < best.start_b)))) {
        best = {sa, sb, len};
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

template <typename Token>
CommonRun longest_common_substring(const std::vector<Token>& a, const std::vector<Token>& b) {
  return longest_common_substring(std::span<const Token>(a), std::span<const Token>(b));
}

}  // namespace chunkfb::metrics
