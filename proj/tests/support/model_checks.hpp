#pragma once

// Small models and gradient checks shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <vector>

#include "chunkfb/seq2seq/model.hpp"

namespace checks {

using Model = chunkfb::seq2seq::Seq2Seq<double>;
using chunkfb::seq2seq::WeightedExample;

inline chunkfb::seq2seq::ModelConfig tiny_config(std::uint64_t seed = 3) {
  chunkfb::seq2seq::ModelConfig c;
  c.embedding_size = 4;
  c.encoder_hidden = 3;
  c.decoder_hidden = 5;
  c.attention_hidden = 3;
  c.decoder_layers = 2;
  c.dropout = 0.0;
  c.src_vocab_size = 9;
  c.tgt_vocab_size = 8;
  c.seed = seed;
  c.init_scale = 0.5;
  return c;
}

/// Two sentences of different lengths with mixed weights, zeros included.
inline std::vector<WeightedExample> mixed_batch() {
  return {
      WeightedExample{{4, 5, 6, 7}, {4, 5, 7}, {1.0, 0.0, 0.7, 0.0}},
      WeightedExample{{8, 4}, {6, 4, 5, 6, 7}, {0.0, 1.0, 1.0, 0.3, 0.0, 1.0}},
  };
}

inline double batch_total(const Model& m, const std::vector<WeightedExample>& batch) {
  chunkfb::ad::Tape<double> tape;
  const auto p = m.bind(tape, false);
  return m.batch_loss(tape, p, batch, nullptr).total.value()(0, 0);
}

inline std::vector<chunkfb::ad::Tensor<double>> analytic_grads(const Model& m, const std::vector<WeightedExample>& batch) {
  chunkfb::ad::Tape<double> tape;
  const auto p = m.bind(tape, true);
  const auto loss = m.batch_loss(tape, p, batch, nullptr);
  tape.backward(loss.total);
  std::vector<chunkfb::ad::Tensor<double>> out;
  for (const auto& v : p.vars) out.push_back(tape.grad(v));
  return out;
}

struct FdResult {
  double max_relative_error = 0;
  std::size_t entries = 0;
};

/// Central differences over every parameter entry. Relative error is taken
/// against max(|analytic|, |numeric|, floor) so that entries whose true
/// gradient is zero are judged on absolute error.
inline FdResult finite_difference_check(Model model, const std::vector<WeightedExample>& batch, double h = 1e-5,
                                        double floor = 1e-6) {
  const auto grads = analytic_grads(model, batch);
  FdResult r;
  auto& values = model.params().values;
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (Eigen::Index i = 0; i < values[k].size(); ++i) {
      const double orig = values[k].data()[i];
      values[k].data()[i] = orig + h;
      const double up = batch_total(model, batch);
      values[k].data()[i] = orig - h;
      const double down = batch_total(model, batch);
      values[k].data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads[k].data()[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
      r.max_relative_error = std::max(r.max_relative_error, std::abs(numeric - analytic) / denom);
      ++r.entries;
    }
  }
  return r;
}

/// Number of (step, sentence) logit rows with weight 0 whose gradient has a
/// nonzero entry, and the number of such rows checked.
inline std::pair<std::size_t, std::size_t> nonzero_masked_logit_rows(const Model& m, const std::vector<WeightedExample>& batch) {
  chunkfb::ad::Tape<double> tape;
  const auto p = m.bind(tape, true);
  const auto loss = m.batch_loss(tape, p, batch, nullptr);
  tape.backward(loss.total);
  std::size_t bad = 0, checked = 0;
  for (std::size_t t = 0; t < loss.logits.size(); ++t) {
    const auto g = tape.grad(loss.logits[t]);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double w = t < batch[b].weights.size() ? batch[b].weights[t] : 0.0;
      if (w != 0.0) continue;
      ++checked;
      if (!(g.row(static_cast<Eigen::Index>(b)).array() == 0.0).all()) ++bad;
    }
  }
  return {bad, checked};
}

}  // namespace checks
