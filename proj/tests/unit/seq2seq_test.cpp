#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "chunkfb/seq2seq/checkpoint.hpp"
#include "chunkfb/seq2seq/model.hpp"
#include "chunkfb/seq2seq/train.hpp"
#include "model_checks.hpp"

using namespace chunkfb;
using namespace chunkfb::seq2seq;
using checks::Model;

namespace {

feedback::FeedbackRecord record(const TokenSeq& src, const TokenSeq& hyp, feedback::Weights w) {
  return feedback::FeedbackRecord{src, hyp, std::move(w), "test", std::nullopt};
}

}  // namespace

TEST(Examples, EosWeights) {
  const WeightedExample a = example_from_pair({{4, 5}, {6, 7, 4}});
  EXPECT_EQ(a.weights, (std::vector<double>{1, 1, 1, 1}));
  const WeightedExample b = example_from_feedback(record({4}, {5, 6}, {1.0, 0.25}));
  EXPECT_EQ(b.weights, (std::vector<double>{1.0, 0.25, 0.25}));
}

TEST(ModelLoss, ZeroParametersGiveUniformDistribution) {
  Model m(checks::tiny_config());
  for (auto& p : m.params().values) p.setZero();
  const text::SentencePair pair{{4, 5, 6}, {4, 5, 6, 7}};
  const double V = m.config().tgt_vocab_size;
  EXPECT_NEAR(m.loss_mle(pair), 5.0 * std::log(V), 1e-12);
}

TEST(ModelLoss, AllOnesFeedbackEqualsMle) {
  const Model m(checks::tiny_config());
  const TokenSeq src{4, 5, 6}, hyp{7, 4, 5, 5};
  EXPECT_NEAR(m.loss_pf(record(src, hyp, feedback::Weights(hyp.size(), 1.0))), m.loss_mle({src, hyp}), 1e-12);
}

TEST(ModelLoss, ZeroWeightsGiveZeroLossAndGradients) {
  const Model m(checks::tiny_config());
  const TokenSeq src{4, 5, 6}, hyp{7, 4, 5};
  EXPECT_EQ(m.loss_pf(record(src, hyp, feedback::Weights(3, 0.0))), 0.0);
  const std::vector<WeightedExample> batch{example_from_feedback(record(src, hyp, feedback::Weights(3, 0.0)))};
  for (const auto& g : checks::analytic_grads(m, batch)) EXPECT_TRUE((g.array() == 0.0).all());
}

TEST(ModelLoss, ConstantWeightScalesMle) {
  const Model m(checks::tiny_config());
  const TokenSeq src{4, 8}, hyp{5, 6, 7};
  EXPECT_NEAR(m.loss_pf(record(src, hyp, feedback::Weights(3, 0.3))), 0.3 * m.loss_mle({src, hyp}), 1e-12);
}

TEST(ModelLoss, BatchEqualsSumOfSentences) {
  const Model m(checks::tiny_config());
  const auto batch = checks::mixed_batch();
  EXPECT_NEAR(checks::batch_total(m, batch), m.example_loss(batch[0]) + m.example_loss(batch[1]), 1e-12);
}

TEST(ModelGradients, FiniteDifferencesOnMixedBatch) {
  const checks::FdResult r = checks::finite_difference_check(Model(checks::tiny_config()), checks::mixed_batch());
  EXPECT_GT(r.entries, 300u);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(ModelGradients, ZeroWeightStepsHaveZeroLogitGradient) {
  const auto [bad, checked] = checks::nonzero_masked_logit_rows(Model(checks::tiny_config()), checks::mixed_batch());
  EXPECT_EQ(bad, 0u);
  EXPECT_GE(checked, 5u);
}

TEST(Training, OverfitsTwoPairs) {
  ModelConfig c = checks::tiny_config();
  c.embedding_size = 16;
  c.encoder_hidden = 16;
  c.decoder_hidden = 16;
  c.attention_hidden = 16;
  c.decoder_layers = 1;
  c.init_scale = 0.1;
  Model m(c);
  const std::vector<WeightedExample> data{example_from_pair({{4, 5, 6}, {7, 6, 5}}), example_from_pair({{8, 6}, {4, 4}})};
  ScheduleConfig s{200, 2, 0.5, 1000, 0.5, 0.0, 5.0};
  const auto logs = train(m, std::span<const WeightedExample>(data), s, 7);
  ASSERT_EQ(logs.size(), 200u);
  EXPECT_LT(logs.back().mean_loss, logs.front().mean_loss);
  EXPECT_EQ(m.decode_greedy(data[0].source, 10).tokens, data[0].target);
  EXPECT_EQ(m.decode_greedy(data[1].source, 10).tokens, data[1].target);
}

TEST(Training, DeterministicAndNoOpForZeroEpochs) {
  const auto data = checks::mixed_batch();
  ScheduleConfig s{3, 1, 0.5, 1, 0.5, 0.01, 1.0};
  ModelConfig c = checks::tiny_config();
  c.dropout = 0.3;
  Model a(c), b(c);
  train(a, std::span<const WeightedExample>(data), s, 11);
  train(b, std::span<const WeightedExample>(data), s, 11);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params().values[i], b.params().values[i]);

  Model z(c);
  const auto before = z.params().values;
  s.epochs = 0;
  EXPECT_TRUE(train(z, std::span<const WeightedExample>(data), s, 11).empty());
  EXPECT_EQ(z.params().values, before);
}

TEST(Training, ReportsBadInputs) {
  Model m(checks::tiny_config());
  std::vector<WeightedExample> data{WeightedExample{{4}, {5}, {1.0}}};
  ScheduleConfig s{1, 1, 0.1, 1, 0.5, 0.01, 1.0};
  try {
    train(m, std::span<const WeightedExample>(data), s, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 batch 1"), std::string::npos) << e.what();
  }
}

TEST(Decoding, BeamOneMatchesGreedy) {
  const Model m(checks::tiny_config(9));
  for (const TokenSeq& src : {TokenSeq{4, 5, 6}, TokenSeq{8}, TokenSeq{7, 7, 4, 5, 6, 8}}) {
    const Hypothesis g = m.decode_greedy(src, default_max_length(src.size()));
    const Hypothesis b = m.decode_beam(src, 1, default_max_length(src.size()));
    EXPECT_EQ(g.tokens, b.tokens);
    EXPECT_EQ(g.finished, b.finished);
    for (auto t : g.tokens) EXPECT_GE(t, text::kNumReserved);
  }
}

TEST(Decoding, BatchedGreedyMatchesSingle) {
  const Model m(checks::tiny_config(5));
  const std::vector<TokenSeq> sources{{4, 5, 6}, {8}, {7, 7, 4, 5, 6, 8}};
  const std::vector<int> lens{11, 7, 17};
  const auto batched = m.decode_greedy(sources, lens);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const Hypothesis one = m.decode_greedy(sources[i], lens[i]);
    EXPECT_EQ(batched[i].tokens, one.tokens);
    ASSERT_EQ(batched[i].log_probs.size(), one.log_probs.size());
    for (std::size_t k = 0; k < one.log_probs.size(); ++k) EXPECT_NEAR(batched[i].log_probs[k], one.log_probs[k], 1e-12);
  }
}

TEST(Decoding, WiderBeamNeverScoresWorse) {
  const Model m(checks::tiny_config(13));
  const TokenSeq src{4, 5, 6, 7};
  const double b1 = m.decode_beam(src, 1, 13).normalized_score();
  const double b4 = m.decode_beam(src, 4, 13).normalized_score();
  EXPECT_GE(b4 + 1e-12, b1);
}

TEST(ModelCheckpoint, RoundTripIsBitExact) {
  ModelConfig c = checks::tiny_config();
  seq2seq::Seq2Seq<float> m(c);
  ModelVocabs v;
  for (int i = 0; i < 5; ++i) v.source.add("s" + std::to_string(i));
  for (int i = 0; i < 4; ++i) v.target.add("t" + std::to_string(i));
  const auto path = (std::filesystem::temp_directory_path() / "chunkfb_model.ckpt").string();
  save_model(path, m, &v);
  const auto loaded = load_model<float>(path);
  EXPECT_EQ(loaded.model.config(), c);
  EXPECT_EQ(loaded.model.params().names, m.params().names);
  EXPECT_EQ(loaded.model.params().values, m.params().values);
  ASSERT_TRUE(loaded.vocabs.has_value());
  EXPECT_EQ(loaded.vocabs->source, v.source);
  EXPECT_EQ(loaded.vocabs->target, v.target);
  EXPECT_EQ(ad::encode_container(model_arrays(loaded.model, &*loaded.vocabs)), ad::encode_container(model_arrays(m, &v)));
}

TEST(ModelConfigs, ValidationAndRoundTrip) {
  ModelConfig c = checks::tiny_config();
  c.seed = 0xfedcba9876543210ull;
  EXPECT_EQ(ModelConfig::from_config(c.to_config()), c);
  c.decoder_layers = 0;
  EXPECT_THROW(c.validate(), Error);
  ScheduleConfig s{7, 3, 0.25, 2, 0.5, 0.01, 2.0};
  EXPECT_EQ(ScheduleConfig::from_config(s.to_config("x"), "x", ScheduleConfig{}), s);
}
