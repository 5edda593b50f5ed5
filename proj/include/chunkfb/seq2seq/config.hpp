#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chunkfb/config.hpp"
#include "chunkfb/feedback/feedback.hpp"
#include "chunkfb/textcorpus/corpus.hpp"

namespace chunkfb::seq2seq {

using text::TokenSeq;

struct ModelConfig {
  int embedding_size = 32;
  int encoder_hidden = 64;  // per direction
  int decoder_hidden = 64;
  int decoder_layers = 1;
  int attention_hidden = 64;
  double dropout = 0.2;
  int src_vocab_size = 0;
  int tgt_vocab_size = 0;
  std::uint64_t seed = 1;
  double init_scale = 0.08;

  void validate() const;
  KeyValueConfig to_config() const;
  static ModelConfig from_config(const KeyValueConfig& cfg);
  bool operator==(const ModelConfig&) const = default;
};

/// One training sentence. `weights` has one entry per target token plus a
/// final entry for EOS.
struct WeightedExample {
  TokenSeq source;
  TokenSeq target;
  std::vector<double> weights;
};

/// Reference pair, every position (EOS included) weighted 1.
WeightedExample example_from_pair(const text::SentencePair& pair);

/// Feedback record; EOS takes the weight of the last hypothesis token.
WeightedExample example_from_feedback(const feedback::FeedbackRecord& record);

struct ScheduleConfig {
  int epochs = 15;
  int batch_size = 16;
  double base_lr = 1.0;
  int decay_start = 4;
  double decay = 0.5;
  double floor = 0.05;
  double clip = 5.0;

  KeyValueConfig to_config(const std::string& prefix) const;
  static ScheduleConfig from_config(const KeyValueConfig& cfg, const std::string& prefix,
                                    const ScheduleConfig& defaults);
  bool operator==(const ScheduleConfig&) const = default;
};

/// Longest hypothesis decoding may produce for a source of `source_length`.
inline int default_max_length(std::size_t source_length) { return 2 * static_cast<int>(source_length) + 5; }

}  // namespace chunkfb::seq2seq
