#include "chunkfb/seq2seq/config.hpp"

#include "chunkfb/error.hpp"

namespace chunkfb::seq2seq {

void ModelConfig::validate() const {
  if (embedding_size < 1 || encoder_hidden < 1 || decoder_hidden < 1 || decoder_layers < 1 ||
      attention_hidden < 1) {
    throw Error("model config: all sizes must be >= 1");
  }
  if (src_vocab_size <= text::kNumReserved || tgt_vocab_size <= text::kNumReserved) {
    throw Error("model config: vocabularies must contain regular tokens");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("model config: dropout must be in [0,1)");
  if (!(init_scale >= 0.0)) throw Error("model config: init_scale must be >= 0");
}

KeyValueConfig ModelConfig::to_config() const {
  KeyValueConfig c;
  c.set("model.embedding_size", std::to_string(embedding_size));
  c.set("model.encoder_hidden", std::to_string(encoder_hidden));
  c.set("model.decoder_hidden", std::to_string(decoder_hidden));
  c.set("model.decoder_layers", std::to_string(decoder_layers));
  c.set("model.attention_hidden", std::to_string(attention_hidden));
  c.set("model.dropout", format_double(dropout));
  c.set("model.src_vocab_size", std::to_string(src_vocab_size));
  c.set("model.tgt_vocab_size", std::to_string(tgt_vocab_size));
  c.set("model.seed", std::to_string(seed));
  c.set("model.init_scale", format_double(init_scale));
  return c;
}

ModelConfig ModelConfig::from_config(const KeyValueConfig& c) {
  ModelConfig m;
  m.embedding_size = static_cast<int>(c.get_int("model.embedding_size", m.embedding_size));
  m.encoder_hidden = static_cast<int>(c.get_int("model.encoder_hidden", m.encoder_hidden));
  m.decoder_hidden = static_cast<int>(c.get_int("model.decoder_hidden", m.decoder_hidden));
  m.decoder_layers = static_cast<int>(c.get_int("model.decoder_layers", m.decoder_layers));
  m.attention_hidden = static_cast<int>(c.get_int("model.attention_hidden", m.attention_hidden));
  m.dropout = c.get_double("model.dropout", m.dropout);
  m.src_vocab_size = static_cast<int>(c.get_int("model.src_vocab_size", m.src_vocab_size));
  m.tgt_vocab_size = static_cast<int>(c.get_int("model.tgt_vocab_size", m.tgt_vocab_size));
  m.seed = c.get_uint64("model.seed", m.seed);
  m.init_scale = c.get_double("model.init_scale", m.init_scale);
  return m;
}

WeightedExample example_from_pair(const text::SentencePair& pair) {
  return {pair.source, pair.target, std::vector<double>(pair.target.size() + 1, 1.0)};
}

WeightedExample example_from_feedback(const feedback::FeedbackRecord& record) {
  feedback::check_record(record);
  if (record.hypothesis.empty()) throw Error("feedback record with empty hypothesis");
  WeightedExample ex{record.source, record.hypothesis, record.weights};
  ex.weights.push_back(record.weights.back());
  return ex;
}

KeyValueConfig ScheduleConfig::to_config(const std::string& prefix) const {
  KeyValueConfig c;
  c.set(prefix + ".epochs", std::to_string(epochs));
  c.set(prefix + ".batch_size", std::to_string(batch_size));
  c.set(prefix + ".base_lr", format_double(base_lr));
  c.set(prefix + ".decay_start", std::to_string(decay_start));
  c.set(prefix + ".decay", format_double(decay));
  c.set(prefix + ".floor", format_double(floor));
  c.set(prefix + ".clip", format_double(clip));
  return c;
}

ScheduleConfig ScheduleConfig::from_config(const KeyValueConfig& c, const std::string& prefix,
                                           const ScheduleConfig& d) {
  ScheduleConfig s;
  s.epochs = static_cast<int>(c.get_int(prefix + ".epochs", d.epochs));
  s.batch_size = static_cast<int>(c.get_int(prefix + ".batch_size", d.batch_size));
  s.base_lr = c.get_double(prefix + ".base_lr", d.base_lr);
  s.decay_start = static_cast<int>(c.get_int(prefix + ".decay_start", d.decay_start));
  s.decay = c.get_double(prefix + ".decay", d.decay);
  s.floor = c.get_double(prefix + ".floor", d.floor);
  s.clip = c.get_double(prefix + ".clip", d.clip);
  if (s.epochs < 0 || s.batch_size < 1) throw Error(prefix + ": need epochs >= 0 and batch_size >= 1");
  return s;
}

}  // namespace chunkfb::seq2seq
