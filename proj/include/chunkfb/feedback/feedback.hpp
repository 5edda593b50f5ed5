#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chunkfb/textcorpus/vocabulary.hpp"

namespace chunkfb::feedback {

using text::TokenSeq;
using Weights = std::vector<double>;

/// A logged translation with per-token weights w_1..w_I.
struct FeedbackRecord {
  TokenSeq source;
  TokenSeq hypothesis;
  Weights weights;
  std::string scheme;  // match, lcs, sent-sbleu, sent-binary, all-ones, noisy:<spec>, human
  std::optional<std::uint64_t> seed;

  bool operator==(const FeedbackRecord&) const = default;
};

/// Throws unless |weights| == |hypothesis|.
void check_record(const FeedbackRecord& r);
bool is_binary(const Weights& w);

// Weight synthesizers. Hypothesis and reference must be non-empty.

/// 1 where the hypothesis token occurs anywhere in the reference. With
/// `clipped`, a token only earns as many ones as it has reference occurrences.
Weights feedback_match(const TokenSeq& hyp, const TokenSeq& ref, bool clipped = false);

/// 1 on the first hypothesis occurrence of the longest common contiguous run.
Weights feedback_lcs(const TokenSeq& hyp, const TokenSeq& ref);

/// Smoothed sentence BLEU, repeated for every position.
Weights feedback_sent_sbleu(const TokenSeq& hyp, const TokenSeq& ref);

/// All ones when strictly more than `threshold` of the tokens are matched.
Weights feedback_sent_binary(const TokenSeq& hyp, const TokenSeq& ref, double threshold = 1.0 / 3.0);

Weights all_ones(const TokenSeq& hyp);

enum class Scheme { kAllOnes, kSentSbleu, kSentBinary, kMatch, kLcs };

const char* scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

FeedbackRecord make_feedback(Scheme scheme, const TokenSeq& source, const TokenSeq& hyp,
                             const TokenSeq& ref);

// Noise injectors. All need binary weights and are deterministic in `seed`.

struct NoiseSpec {
  double under_selection_ratio = 0.0;
  double incorrect_selection_ratio = 0.0;
  bool replace_unselected_with_random = false;
  std::uint64_t seed = 0;

  bool is_clean() const {
    return under_selection_ratio == 0.0 && incorrect_selection_ratio == 0.0 &&
           !replace_unselected_with_random;
  }
  std::string tag() const;
};

void validate(const NoiseSpec& spec);

/// Round-half-to-even of ratio * count.
std::size_t noisy_count(double ratio, std::size_t count);

/// Unselects round(ratio * k) of the k selected positions.
FeedbackRecord inject_under_selection(const FeedbackRecord& r, double ratio, std::uint64_t seed);

/// Moves round(ratio * k) marks from selected to unselected positions, keeping
/// the marked total. When too few unselected positions exist, moves as many as
/// possible; `achieved_ratio` receives the realized fraction.
FeedbackRecord inject_incorrect_selection(const FeedbackRecord& r, double ratio, std::uint64_t seed,
                                          double* achieved_ratio = nullptr);

/// Under-selection followed by incorrect selection on the reduced set. New
/// marks only go to positions that were unselected in `r`.
FeedbackRecord inject_combined(const FeedbackRecord& r, double under_ratio, double incorrect_ratio,
                               std::uint64_t seed);

/// Replaces every unselected hypothesis token with a uniform non-reserved id
/// from a vocabulary of `vocab_size` tokens.
FeedbackRecord replace_unselected_random(const FeedbackRecord& r, std::size_t vocab_size,
                                         std::uint64_t seed);

/// Applies every component of `spec`; per-record streams derive from
/// spec.seed and `record_index`.
FeedbackRecord apply_noise(const FeedbackRecord& r, const NoiseSpec& spec, std::size_t vocab_size,
                           std::uint64_t record_index);

struct SelectionStats {
  std::size_t records = 0;
  std::size_t tokens = 0;
  double marked = 0;
  double marked_fraction = 0;
  /// Sentences by marked fraction, ten equal-width bins ([0.9,1.0] last).
  std::vector<std::size_t> histogram = std::vector<std::size_t>(10, 0);
};

SelectionStats selection_stats(const std::vector<FeedbackRecord>& records);

// Feedback JSONL: {"src", "hyp", "weights", "scheme", "seed"?} per line.
void write_jsonl(const std::string& path, const std::vector<FeedbackRecord>& records,
                 const text::Vocabulary& src_vocab, const text::Vocabulary& tgt_vocab);
std::vector<FeedbackRecord> read_jsonl(const std::string& path, const text::Vocabulary& src_vocab,
                                       const text::Vocabulary& tgt_vocab);
std::string to_json_line(const FeedbackRecord& r, const text::Vocabulary& src_vocab,
                         const text::Vocabulary& tgt_vocab);
FeedbackRecord from_json_line(const std::string& line, const text::Vocabulary& src_vocab,
                              const text::Vocabulary& tgt_vocab);

}  // namespace chunkfb::feedback
