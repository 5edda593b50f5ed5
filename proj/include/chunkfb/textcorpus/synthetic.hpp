#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chunkfb/config.hpp"
#include "chunkfb/random.hpp"
#include "chunkfb/textcorpus/corpus.hpp"

namespace chunkfb::text {

// Lexical translation task with a controlled domain shift.
//
// Source words are s0..s{N-1}. The first `ambiguous_count` are ambiguous,
// the next `cue_count` are cue words and the last `in_domain_only_count`
// never occur out of domain. Every other word is translated 1:1 by the
// out-of-domain lexicon (s_k -> t_k).
//
// Ambiguous words have two senses, t_k and t_k'. Out of domain the second
// sense is drawn with probability ood_cue_alt_prob right after a cue word and
// ood_plain_alt_prob elsewhere; in domain it is always used. When the marker token
// appears the two target words produced after it are swapped.
struct SyntheticTaskSpec {
  int source_vocab_size = 100;
  int ambiguous_count = 20;
  int cue_count = 10;
  int in_domain_only_count = 10;
  std::string marker = "MRK";
  int min_length = 3;
  int max_length = 12;
  int ood_train_size = 5000;
  int id_train_size = 2000;
  int id_test_size = 500;
  std::uint64_t seed = 17;

  double marker_prob = 0.3;
  double ood_ambiguous_rate = 0.15;
  double id_ambiguous_rate = 0.3;
  double id_only_rate = 0.1;
  double ood_cue_rate = 0.3;
  double id_cue_rate = 0.25;
  double ood_cue_alt_prob = 0.8;
  double ood_plain_alt_prob = 0.4;

  // Filled by resolve() when empty.
  std::map<std::string, std::string> ood_lexicon;
  std::map<std::string, std::string> id_overrides;

  std::string source_word(int k) const { return "s" + std::to_string(k); }
  bool is_ambiguous(int k) const { return k < ambiguous_count; }
  bool is_cue(int k) const { return k >= ambiguous_count && k < ambiguous_count + cue_count; }
  bool is_in_domain_only(int k) const { return k >= source_vocab_size - in_domain_only_count; }

  /// Fills the default lexicon and overrides, then validates. Throws on an
  /// inconsistent spec.
  void resolve();
  void validate() const;

  /// Ambiguous source words with their (out-of-domain, in-domain) senses.
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> ambiguous_senses() const;

  KeyValueConfig to_config() const;
  static SyntheticTaskSpec from_config(const KeyValueConfig& cfg);
};

struct SyntheticTask {
  SyntheticTaskSpec spec;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  ParallelCorpus ood_train;
  ParallelCorpus id_train;
  ParallelCorpus id_test;
};

/// Pure function of the spec; splits share no source sentence.
SyntheticTask generate_synthetic_task(SyntheticTaskSpec spec);

/// Translates one source sentence (marker included). Needs a resolved spec;
/// `rng` is only consulted for out-of-domain ambiguous words.
std::vector<std::string> translate_words(const SyntheticTaskSpec& spec,
                                         const std::vector<std::string>& source, Domain domain,
                                         Rng& rng);

}  // namespace chunkfb::text
