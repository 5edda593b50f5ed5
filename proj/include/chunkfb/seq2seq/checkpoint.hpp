#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chunkfb/ad/checkpoint.hpp"
#include "chunkfb/seq2seq/model.hpp"
#include "chunkfb/textcorpus/vocabulary.hpp"

namespace chunkfb::seq2seq {

// Reserved array names next to the parameters.
inline constexpr const char* kConfigArray = "meta.config";
inline constexpr const char* kSrcVocabArray = "meta.src_vocab";
inline constexpr const char* kTgtVocabArray = "meta.tgt_vocab";

ad::NamedArray text_array(const std::string& name, const std::string& text);
std::string array_text(const ad::NamedArray& a);

ad::NamedArray vocab_array(const std::string& name, const text::Vocabulary& v);
text::Vocabulary array_vocab(const ad::NamedArray& a);

const ad::NamedArray* find_array(const std::vector<ad::NamedArray>& arrays, const std::string& name);

struct ModelVocabs {
  text::Vocabulary source;
  text::Vocabulary target;
};

template <typename Scalar>
std::vector<ad::NamedArray> model_arrays(const Seq2Seq<Scalar>& model, const ModelVocabs* vocabs = nullptr) {
  std::vector<ad::NamedArray> arrays;
  arrays.push_back(text_array(kConfigArray, model.config().to_config().to_string()));
  if (vocabs != nullptr) {
    arrays.push_back(vocab_array(kSrcVocabArray, vocabs->source));
    arrays.push_back(vocab_array(kTgtVocabArray, vocabs->target));
  }
  const auto& p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) arrays.push_back(ad::to_array(p.names[i], p.values[i]));
  return arrays;
}

template <typename Scalar>
void save_model(const std::string& path, const Seq2Seq<Scalar>& model, const ModelVocabs* vocabs = nullptr) {
  ad::write_container(path, model_arrays(model, vocabs));
}

template <typename Scalar>
struct LoadedModel {
  Seq2Seq<Scalar> model;
  std::optional<ModelVocabs> vocabs;
};

template <typename Scalar>
LoadedModel<Scalar> model_from_arrays(const std::vector<ad::NamedArray>& arrays) {
  const auto* cfg = find_array(arrays, kConfigArray);
  if (cfg == nullptr) throw Error("checkpoint: no embedded model config");
  const ModelConfig config = ModelConfig::from_config(KeyValueConfig::parse(array_text(*cfg)));
  ad::ParamSet<Scalar> params;
  for (const auto& a : arrays) {
    if (a.name.rfind("meta.", 0) == 0) continue;
    params.add(a.name, ad::from_array<Scalar>(a));
  }
  std::optional<ModelVocabs> vocabs;
  const auto* sv = find_array(arrays, kSrcVocabArray);
  const auto* tv = find_array(arrays, kTgtVocabArray);
  if (sv != nullptr && tv != nullptr) vocabs = ModelVocabs{array_vocab(*sv), array_vocab(*tv)};
  return LoadedModel<Scalar>{Seq2Seq<Scalar>(config, std::move(params)), std::move(vocabs)};
}

template <typename Scalar>
LoadedModel<Scalar> load_model(const std::string& path) {
  try {
    return model_from_arrays<Scalar>(ad::read_container(path));
  } catch (const std::out_of_range& e) {
    throw Error("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace chunkfb::seq2seq
