#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chunkfb/metrics/bleu.hpp"
#include "chunkfb/metrics/evaluate.hpp"
#include "chunkfb/metrics/lcs.hpp"
#include "chunkfb/metrics/ter.hpp"
#include "chunkfb/random.hpp"
#include "oracles.hpp"

using namespace chunkfb;
using namespace chunkfb::metrics;
using Words = std::vector<std::string>;

TEST(Lcs, Examples) {
  const std::vector<char> abc{'a', 'b', 'c'}, xyz{'x', 'y', 'z'};
  EXPECT_EQ(longest_common_substring(abc, abc), (CommonRun{0, 0, 3}));
  EXPECT_EQ(longest_common_substring(abc, xyz).length, 0u);
  const Words hyp{"the", "crisis", "is", "above", "all", "."};
  const Words ref{"the", "crisis", "is", "over", "."};
  EXPECT_EQ(longest_common_substring(hyp, ref), (CommonRun{0, 0, 3}));
  EXPECT_EQ(longest_common_substring(hyp, ref), oracle::brute_force_lcs(hyp, ref));
}

TEST(Lcs, ExhaustiveAgainstBruteForce) {
  const auto seqs = oracle::all_sequences(3, 5);
  for (const auto& a : seqs) {
    for (const auto& b : seqs) ASSERT_EQ(longest_common_substring(a, b), oracle::brute_force_lcs(a, b));
  }
}

TEST(Bleu, IdentityIsHundred) {
  const std::vector<Words> h{{"a", "b", "c", "d", "e"}, {"x", "y", "z", "w"}};
  EXPECT_DOUBLE_EQ(corpus_bleu(h, h).bleu_percent, 100.0);
  EXPECT_DOUBLE_EQ(sentence_bleu(h[0], h[0]), 1.0);
}

TEST(Bleu, HandCountedClipping) {
  const BleuReport r = corpus_bleu({{"the", "the", "the", "the"}}, {{"the", "cat"}});
  EXPECT_DOUBLE_EQ(r.precisions[0], 0.25);
  EXPECT_DOUBLE_EQ(r.precisions[1], 0.0);
  EXPECT_DOUBLE_EQ(r.bleu_percent, 0.0);
}

TEST(Bleu, AgreesWithIndependentCounter) {
  Rng rng(3);
  std::vector<std::vector<int>> hyps, refs;
  for (int i = 0; i < 50; ++i) {
    hyps.push_back(oracle::random_sequence(rng, 4, 3, 12));
    refs.push_back(oracle::random_sequence(rng, 4, 3, 12));
  }
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(std::span<const int>(hyps[i]), std::span<const int>(refs[i]));
  EXPECT_NEAR(bleu_from_stats(total), oracle::naive_corpus_bleu(hyps, refs), 1e-12);
}

TEST(Bleu, DoublingCorpusAndPermutation) {
  const std::vector<Words> h{{"a", "b", "c"}, {"d", "e", "f", "g"}, {"a", "c", "b", "d"}};
  const std::vector<Words> r{{"a", "b", "d"}, {"d", "e", "f", "h"}, {"a", "b", "c", "d"}};
  const double base = corpus_bleu(h, r).bleu_percent;
  std::vector<Words> hh = h, rr = r;
  hh.insert(hh.end(), h.begin(), h.end());
  rr.insert(rr.end(), r.begin(), r.end());
  EXPECT_NEAR(corpus_bleu(hh, rr).bleu_percent, base, 1e-9);
  EXPECT_NEAR(corpus_bleu({h[2], h[0], h[1]}, {r[2], r[0], r[1]}).bleu_percent, base, 1e-9);
  EXPECT_THROW(corpus_bleu(h, {r[0]}), Error);
}

TEST(Bleu, CaseInsensitive) {
  EXPECT_DOUBLE_EQ(corpus_bleu({{"The", "Cat", "sat", "down"}}, {{"the", "cat", "SAT", "down"}}).bleu_percent, 100.0);
}

TEST(SentenceBleu, SingleTokenClosedForm) {
  for (std::size_t k = 1; k <= 6; ++k) {
    Words ref(k, "x");
    ref[0] = "a";
    EXPECT_NEAR(sentence_bleu(Words{"a"}, ref), std::exp(1.0 - static_cast<double>(k)), 1e-12);
  }
}

TEST(SentenceBleu, RangeAndDisjoint) {
  const double v = sentence_bleu(Words{"a", "b", "c"}, Words{"x", "y", "z"});
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 0.05);
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto h = oracle::random_sequence(rng, 5, 1, 10);
    const auto r = oracle::random_sequence(rng, 5, 1, 10);
    const double s = sentence_bleu(h, r);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Ter, Examples) {
  EXPECT_DOUBLE_EQ(ter(Words{"a", "b", "c"}, Words{"a", "b", "c"}), 0.0);
  EXPECT_DOUBLE_EQ(ter(Words{"a", "b", "x", "d", "e"}, Words{"a", "b", "c", "d", "e"}), 20.0);
  const auto r = ter_edits(Words{"c", "d", "a", "b"}, Words{"a", "b", "c", "d"});
  EXPECT_EQ(r.shifts, 1u);
  EXPECT_DOUBLE_EQ(r.percent(), 25.0);
}

TEST(Ter, NeverAboveWer) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto h = oracle::random_sequence(rng, 4, 1, 10);
    const auto r = oracle::random_sequence(rng, 4, 1, 10);
    EXPECT_LE(ter_edits(h, r).edits, oracle::dp_word_edit_distance(h, r));
  }
}

TEST(Ter, SingleBlockMoveCostsOneEdit) {
  // A hypothesis that is the reference with one block moved needs exactly
  // one shift, unless the move was a no-op.
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    const auto r = oracle::random_sequence(rng, 6, 4, 9);
    const std::size_t len = 1 + rng.index(3);
    const std::size_t start = rng.index(r.size() - len + 1);
    std::vector<int> block(r.begin() + static_cast<std::ptrdiff_t>(start), r.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::vector<int> h = r;
    h.erase(h.begin() + static_cast<std::ptrdiff_t>(start), h.begin() + static_cast<std::ptrdiff_t>(start + len));
    const std::size_t dest = rng.index(h.size() + 1);
    h.insert(h.begin() + static_cast<std::ptrdiff_t>(dest), block.begin(), block.end());
    EXPECT_EQ(ter_edits(h, r).edits, h == r ? 0u : 1u);
  }
}

TEST(Evaluate, ReportAndTsv) {
  const EvalReport r = evaluate({"a b c d", "e f g h"}, {"a b c d", "e f g x"});
  EXPECT_EQ(r.sentences, 2u);
  EXPECT_GT(r.bleu_percent, 0.0);
  EXPECT_LT(r.bleu_percent, 100.0);
  EXPECT_DOUBLE_EQ(r.ter_percent, 12.5);
  EXPECT_EQ(tsv_header(), "bleu\tter\tbp\tp1\tp2\tp3\tp4");
  const std::string row = to_tsv_row(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), '\t'), 6);
  EXPECT_THROW(evaluate({"a"}, {"a", "b"}), Error);
}
