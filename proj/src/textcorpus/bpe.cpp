#include "chunkfb/textcorpus/bpe.hpp"

#include <fstream>
#include <map>
#include <string_view>

#include "chunkfb/error.hpp"
#include "chunkfb/textcorpus/vocabulary.hpp"

namespace chunkfb::text {

namespace {

using Pair = std::pair<std::string, std::string>;

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

void merge_in_place(std::vector<std::string>& symbols, const Pair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(symbols[i] + symbols[i + 1]);
      ++i;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
}

}  // namespace

std::vector<std::string> initial_segmentation(const std::string& word) {
  if (word.empty()) throw Error("apply_bpe: empty word");
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < word.size();) {
    const std::size_t n = std::min(utf8_length(static_cast<unsigned char>(word[i])), word.size() - i);
    symbols.push_back(word.substr(i, n));
    i += n;
  }
  symbols.back() += kEndOfWord;
  return symbols;
}

BpeModel learn_bpe(const std::vector<std::string>& lines, std::size_t merge_count) {
  std::map<std::string, std::size_t> word_freq;
  for (const auto& line : lines) {
    for (const auto& w : split_tokens(line)) ++word_freq[w];
  }
  if (word_freq.empty()) throw Error("learn_bpe: empty corpus");

  std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.emplace_back(initial_segmentation(w), f);

  BpeModel model;
  while (model.merges.size() < merge_count) {
    // Ordered map: the first maximum found is the lexicographically smallest.
    std::map<Pair, std::size_t> counts;
    for (const auto& [symbols, freq] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        counts[{symbols[i], symbols[i + 1]}] += freq;
      }
    }
    if (counts.empty()) break;
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const Pair merge = best->first;
    model.merges.push_back(merge);
    for (auto& entry : words) merge_in_place(entry.first, merge);
  }
  return model;
}

std::vector<std::string> apply_bpe(const BpeModel& model, const std::string& word) {
  std::vector<std::string> symbols = initial_segmentation(word);
  if (model.merges.empty()) return symbols;
  std::map<Pair, std::size_t> rank;
  for (std::size_t i = 0; i < model.merges.size(); ++i) rank.emplace(model.merges[i], i);

  while (symbols.size() > 1) {
    std::size_t best_rank = model.merges.size();
    const Pair* best = nullptr;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto it = rank.find({symbols[i], symbols[i + 1]});
      if (it != rank.end() && it->second < best_rank) {
        best_rank = it->second;
        best = &it->first;
      }
    }
    if (best == nullptr) break;
    merge_in_place(symbols, *best);
  }
  return symbols;
}

std::string detokenize_word(const std::vector<std::string>& subwords) {
  std::string word;
  for (const auto& s : subwords) word += s;
  const std::string_view marker(kEndOfWord);
  if (word.size() >= marker.size() && word.compare(word.size() - marker.size(), marker.size(), marker) == 0) {
    word.resize(word.size() - marker.size());
  }
  return word;
}

std::string apply_bpe_line(const BpeModel& model, const std::string& line) {
  std::vector<std::string> out;
  for (const auto& w : split_tokens(line)) {
    for (auto& s : apply_bpe(model, w)) out.push_back(std::move(s));
  }
  return join_tokens(out);
}

std::string detokenize_line(const std::string& line) {
  const std::string_view marker(kEndOfWord);
  std::vector<std::string> words;
  std::string current;
  for (const auto& s : split_tokens(line)) {
    current += s;
    if (current.size() >= marker.size() &&
        current.compare(current.size() - marker.size(), marker.size(), marker) == 0) {
      current.resize(current.size() - marker.size());
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return join_tokens(words);
}

void BpeModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write BPE model " + path);
  for (const auto& [a, b] : merges) out << a << ' ' << b << '\n';
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open BPE model " + path);
  BpeModel model;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = split_tokens(line);
    if (parts.size() != 2) {
      throw Error("BPE model " + path + " line " + std::to_string(lineno) + ": expected two symbols");
    }
    model.merges.emplace_back(parts[0], parts[1]);
  }
  return model;
}

}  // namespace chunkfb::text
