#include "chunkfb/textcorpus/corpus.hpp"

#include <fstream>

#include "chunkfb/error.hpp"

namespace chunkfb::text {

const char* domain_name(Domain d) {
  return d == Domain::kInDomain ? "in-domain" : "out-of-domain";
}

namespace {

void check_sequence(const TokenSeq& seq, const Vocabulary& vocab, std::size_t index,
                    const char* side) {
  if (seq.empty()) {
    throw Error("pair " + std::to_string(index) + ": empty " + side + " sentence");
  }
  for (TokenId id : seq) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      throw Error("pair " + std::to_string(index) + ": " + side + " token id " +
                  std::to_string(id) + " out of range");
    }
    if (id == kPad) {
      throw Error("pair " + std::to_string(index) + ": PAD inside " + side + " sentence");
    }
  }
}

}  // namespace

void validate(const ParallelCorpus& corpus, const Vocabulary& src_vocab,
              const Vocabulary& tgt_vocab) {
  if (corpus.pairs.empty()) throw Error("empty corpus");
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    check_sequence(corpus.pairs[i].source, src_vocab, i, "source");
    check_sequence(corpus.pairs[i].target, tgt_vocab, i, "target");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

ParallelCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                             Vocabulary& src_vocab, Vocabulary& tgt_vocab, bool grow) {
  const auto src_lines = read_lines(source_path);
  const auto tgt_lines = read_lines(target_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw Error("line count mismatch: " + source_path + " has " + std::to_string(src_lines.size()) +
                " lines, " + target_path + " has " + std::to_string(tgt_lines.size()));
  }
  if (src_lines.empty()) throw Error("empty corpus: " + source_path);

  auto encode = [grow](Vocabulary& vocab, const std::string& line) {
    TokenSeq ids;
    for (const auto& t : split_tokens(line)) ids.push_back(grow ? vocab.add(t) : vocab.encode(t));
    return ids;
  };

  ParallelCorpus corpus;
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    SentencePair p{encode(src_vocab, src_lines[i]), encode(tgt_vocab, tgt_lines[i])};
    if (p.source.empty() || p.target.empty()) {
      throw Error(source_path + ": empty sentence at line " + std::to_string(i + 1));
    }
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

void write_parallel(const std::string& source_path, const std::string& target_path,
                    const ParallelCorpus& corpus, const Vocabulary& src_vocab,
                    const Vocabulary& tgt_vocab) {
  std::vector<std::string> src, tgt;
  src.reserve(corpus.size());
  tgt.reserve(corpus.size());
  for (const auto& p : corpus.pairs) {
    src.push_back(src_vocab.decode(p.source));
    tgt.push_back(tgt_vocab.decode(p.target));
  }
  write_lines(source_path, src);
  write_lines(target_path, tgt);
}

}  // namespace chunkfb::text
