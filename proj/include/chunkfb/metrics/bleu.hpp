#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chunkfb/error.hpp"

namespace chunkfb::metrics {

inline constexpr int kMaxBleuOrder = 4;

/// Clipped n-gram matches and hypothesis n-gram totals for one or more
/// sentence pairs.
struct BleuStats {
  std::array<double, kMaxBleuOrder> matches{};
  std::array<double, kMaxBleuOrder> totals{};
  double hyp_length = 0;
  double ref_length = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < kMaxBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_length += o.hyp_length;
    ref_length += o.ref_length;
    return *this;
  }
};

template <typename Token>
BleuStats bleu_stats(std::span<const Token> hyp, std::span<const Token> ref, int max_n = kMaxBleuOrder) {
  if (max_n < 1 || max_n > kMaxBleuOrder) throw Error("BLEU order must be in 1..4");
  BleuStats s;
  s.hyp_length = static_cast<double>(hyp.size());
  s.ref_length = static_cast<double>(ref.size());
  for (int n = 1; n <= max_n; ++n) {
    const auto count = [n](std::span<const Token> seq) {
      std::map<std::vector<Token>, int> c;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i) {
        ++c[std::vector<Token>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                               seq.begin() + static_cast<std::ptrdiff_t>(i) + n)];
      }
      return c;
    };
    const auto hc = count(hyp);
    const auto rc = count(ref);
    double matched = 0, total = 0;
    for (const auto& [gram, c] : hc) {
      total += c;
      const auto it = rc.find(gram);
      if (it != rc.end()) matched += std::min(c, it->second);
    }
    s.matches[static_cast<std::size_t>(n - 1)] = matched;
    s.totals[static_cast<std::size_t>(n - 1)] = total;
  }
  return s;
}

inline double brevity_penalty(double hyp_length, double ref_length) {
  if (hyp_length <= 0) return 0.0;
  return hyp_length < ref_length ? std::exp(1.0 - ref_length / hyp_length) : 1.0;
}

/// Unsmoothed BLEU in [0,1] from aggregated statistics.
inline double bleu_from_stats(const BleuStats& s, int max_n = kMaxBleuOrder) {
  double log_sum = 0;
  for (int n = 0; n < max_n; ++n) {
    if (s.matches[n] <= 0 || s.totals[n] <= 0) return 0.0;
    log_sum += std::log(s.matches[n] / s.totals[n]);
  }
  return brevity_penalty(s.hyp_length, s.ref_length) * std::exp(log_sum / max_n);
}

/// Numerator used for a unigram precision with no match, so that sentence
/// BLEU stays strictly positive.
inline constexpr double kSentenceBleuUnigramFloor = 1e-6;

/// Smoothed sentence BLEU in [0,1]: add-one on numerator and denominator
/// for orders >= 2.
template <typename Token>
double sentence_bleu(std::span<const Token> hyp, std::span<const Token> ref, int max_n = kMaxBleuOrder) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const BleuStats s = bleu_stats(hyp, ref, max_n);
  double log_sum = std::log(std::max(s.matches[0], kSentenceBleuUnigramFloor) / s.totals[0]);
  for (int n = 1; n < max_n; ++n) {
    log_sum += std::log((s.matches[n] + 1.0) / (s.totals[n] + 1.0));
  }
  return brevity_penalty(s.hyp_length, s.ref_length) * std::exp(log_sum / max_n);
}

template <typename Token>
double sentence_bleu(const std::vector<Token>& hyp, const std::vector<Token>& ref, int max_n = kMaxBleuOrder) {
  return sentence_bleu(std::span<const Token>(hyp), std::span<const Token>(ref), max_n);
}

struct BleuReport {
  double bleu_percent = 0;
  std::array<double, kMaxBleuOrder> precisions{};
  double brevity_penalty = 0;
  double hyp_length = 0;
  double ref_length = 0;
  int max_n = kMaxBleuOrder;
};

BleuReport report_from_stats(const BleuStats& stats, int max_n);

/// Corpus BLEU over whitespace-tokenized strings.
BleuReport corpus_bleu(const std::vector<std::vector<std::string>>& hyps,
                       const std::vector<std::vector<std::string>>& refs, int max_n = kMaxBleuOrder,
                       bool lowercase = true);

std::string to_lower(const std::string& s);

}  // namespace chunkfb::metrics
