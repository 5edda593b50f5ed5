#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chunkfb::text {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kNumReserved = 4;

/// Dense token <-> id map. Ids 0..3 are PAD, BOS, EOS and UNK.
class Vocabulary {
 public:
  Vocabulary();

  /// Builds a vocabulary containing `tokens` in order after the reserved ids.
  /// Duplicates are ignored.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  TokenId add(std::string_view token);

  /// Returns kUnk for unknown tokens.
  TokenId encode(std::string_view token) const;
  const std::string& lookup(TokenId id) const;
  bool contains(std::string_view token) const;

  TokenSeq encode_line(std::string_view line) const;
  std::string decode(const TokenSeq& ids) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Whitespace tokenization.
std::vector<std::string> split_tokens(std::string_view line);
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace chunkfb::text
