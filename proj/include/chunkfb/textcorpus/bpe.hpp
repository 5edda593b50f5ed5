#pragma once

#include <string>
#include <utility>
#include <vector>

namespace chunkfb::text {

/// Appended to the last symbol of every word.
inline constexpr const char* kEndOfWord = "</w>";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;

  std::size_t merge_count() const { return merges.size(); }

  void save(const std::string& path) const;
  static BpeModel load(const std::string& path);
};

/// Greedy pair-merge learning over whitespace-tokenized lines. The most
/// frequent adjacent pair wins; ties go to the lexicographically smallest
/// pair. Stops early when no pair is left.
BpeModel learn_bpe(const std::vector<std::string>& lines, std::size_t merge_count);

/// Initial segmentation: one symbol per UTF-8 character, end marker on the last.
std::vector<std::string> initial_segmentation(const std::string& word);

std::vector<std::string> apply_bpe(const BpeModel& model, const std::string& word);

/// Inverse of apply_bpe for a single word.
std::string detokenize_word(const std::vector<std::string>& subwords);

/// Segments every whitespace token of a line; subwords joined by spaces.
std::string apply_bpe_line(const BpeModel& model, const std::string& line);
std::string detokenize_line(const std::string& line);

}  // namespace chunkfb::text
