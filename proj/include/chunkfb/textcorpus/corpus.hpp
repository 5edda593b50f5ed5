#pragma once

#include <string>
#include <vector>

#include "chunkfb/textcorpus/vocabulary.hpp"

namespace chunkfb::text {

struct SentencePair {
  TokenSeq source;
  TokenSeq target;

  bool operator==(const SentencePair&) const = default;
};

enum class Domain { kOutOfDomain, kInDomain };

const char* domain_name(Domain d);

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  Domain domain = Domain::kOutOfDomain;

  std::size_t size() const { return pairs.size(); }
  bool operator==(const ParallelCorpus&) const = default;
};

/// Throws if a pair is empty, carries interior PAD ids or ids outside the
/// vocabularies.
void validate(const ParallelCorpus& corpus, const Vocabulary& src_vocab,
              const Vocabulary& tgt_vocab);

/// Reads raw lines of a text file (LF endings, trailing CR stripped).
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

/// Sibling plain-text files, one sentence per line, space-separated tokens.
/// Unknown tokens are added to the vocabularies when `grow` is set and mapped
/// to UNK otherwise.
ParallelCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                             Vocabulary& src_vocab, Vocabulary& tgt_vocab, bool grow = false);

void write_parallel(const std::string& source_path, const std::string& target_path,
                    const ParallelCorpus& corpus, const Vocabulary& src_vocab,
                    const Vocabulary& tgt_vocab);

}  // namespace chunkfb::text
