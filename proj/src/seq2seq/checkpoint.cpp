#include "chunkfb/seq2seq/checkpoint.hpp"

#include <sstream>

namespace chunkfb::seq2seq {

ad::NamedArray text_array(const std::string& name, const std::string& text) {
  ad::NamedArray a;
  a.name = name;
  a.dtype = ad::DType::kU8;
  a.dims = {static_cast<std::uint64_t>(text.size())};
  a.bytes.assign(text.begin(), text.end());
  return a;
}

std::string array_text(const ad::NamedArray& a) {
  if (a.dtype != ad::DType::kU8) throw Error("array " + a.name + ": expected u8 text");
  return std::string(a.bytes.begin(), a.bytes.end());
}

ad::NamedArray vocab_array(const std::string& name, const text::Vocabulary& v) {
  std::string joined;
  for (std::size_t i = text::kNumReserved; i < v.size(); ++i) {
    joined += v.tokens()[i];
    joined += '\n';
  }
  return text_array(name, joined);
}

text::Vocabulary array_vocab(const ad::NamedArray& a) {
  std::istringstream in(array_text(a));
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return text::Vocabulary::from_tokens(tokens);
}

const ad::NamedArray* find_array(const std::vector<ad::NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

}  // namespace chunkfb::seq2seq
