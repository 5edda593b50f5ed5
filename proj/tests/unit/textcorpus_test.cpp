#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "chunkfb/error.hpp"
#include "chunkfb/random.hpp"
#include "chunkfb/textcorpus/bpe.hpp"
#include "chunkfb/textcorpus/corpus.hpp"
#include "chunkfb/textcorpus/synthetic.hpp"
#include "chunkfb/textcorpus/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace chunkfb;
using namespace chunkfb::text;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chunkfb_text_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Vocabulary, ReservedIdsAndRoundTrip) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.encode("anything"), kUnk);
  const TokenId a = v.add("alpha");
  EXPECT_EQ(a, 4);
  EXPECT_EQ(v.add("alpha"), a);
  EXPECT_EQ(v.lookup(v.encode("alpha")), "alpha");
  EXPECT_THROW(v.lookup(99), Error);

  const auto ids = v.encode_line("alpha beta alpha");
  EXPECT_EQ(ids, (TokenSeq{4, kUnk, 4}));

  const fs::path dir = temp_dir("vocab");
  v.add("beta");
  v.save((dir / "v.txt").string());
  EXPECT_EQ(Vocabulary::load((dir / "v.txt").string()), v);
}

TEST(Bpe, HandWorkedMerges) {
  const BpeModel m = learn_bpe({"low low lower"}, 2);
  ASSERT_EQ(m.merges.size(), 2u);
  EXPECT_EQ(m.merges[0], std::make_pair(std::string("l"), std::string("o")));
  // The end-of-word marker rides on the last symbol, so the second merge
  // joins "lo" with "w</w>".
  EXPECT_EQ(m.merges[1], std::make_pair(std::string("lo"), std::string("w</w>")));
  EXPECT_EQ(apply_bpe(m, "low"), (std::vector<std::string>{"low</w>"}));
}

TEST(Bpe, DegenerateInputs) {
  EXPECT_TRUE(learn_bpe({"low lower"}, 0).merges.empty());
  EXPECT_TRUE(learn_bpe({"a"}, 10).merges.empty());
  EXPECT_THROW(learn_bpe({}, 3), Error);
  EXPECT_THROW(learn_bpe({"", "  "}, 3), Error);
  EXPECT_EQ(apply_bpe(BpeModel{}, "cat"), (std::vector<std::string>{"c", "a", "t</w>"}));
  EXPECT_EQ(initial_segmentation("über"), (std::vector<std::string>{"ü", "b", "e", "r</w>"}));
}

TEST(Bpe, FewerMergesThanRequested) {
  const BpeModel m = learn_bpe({"ab ab"}, 50);
  EXPECT_EQ(m.merges.size(), 1u);
}

TEST(Bpe, RandomWordsRoundTrip) {
  Rng rng(7);
  std::vector<std::string> corpus;
  const std::string letters = "abcdefgh";
  auto word = [&] {
    std::string w;
    const std::size_t n = 1 + rng.index(9);
    for (std::size_t i = 0; i < n; ++i) w += letters[rng.index(letters.size())];
    return w;
  };
  for (int i = 0; i < 200; ++i) corpus.push_back(word() + " " + word() + " " + word());
  const BpeModel m = learn_bpe(corpus, 60);
  for (int i = 0; i < 1000; ++i) {
    const std::string w = word();
    EXPECT_EQ(detokenize_word(apply_bpe(m, w)), w);
  }
  const std::string line = "abc defg h";
  EXPECT_EQ(detokenize_line(apply_bpe_line(m, line)), line);
}

TEST(Bpe, SaveLoad) {
  const BpeModel m = learn_bpe({"low low lower newest widest"}, 6);
  const fs::path dir = temp_dir("bpe");
  m.save((dir / "m.txt").string());
  EXPECT_EQ(BpeModel::load((dir / "m.txt").string()).merges, m.merges);
}

TEST(Corpus, WriteReadRoundTripAndErrors) {
  Vocabulary sv, tv;
  ParallelCorpus c;
  c.pairs.push_back({{sv.add("a"), sv.add("b")}, {tv.add("x")}});
  c.pairs.push_back({{sv.add("c")}, {tv.add("y"), tv.add("z")}});
  const fs::path dir = temp_dir("corpus");
  write_parallel((dir / "c.src").string(), (dir / "c.tgt").string(), c, sv, tv);
  Vocabulary sv2 = sv, tv2 = tv;
  EXPECT_EQ(read_parallel((dir / "c.src").string(), (dir / "c.tgt").string(), sv2, tv2), c);

  std::vector<std::string> ten(10, "a"), nine(9, "x");
  write_lines((dir / "m.src").string(), ten);
  write_lines((dir / "m.tgt").string(), nine);
  try {
    read_parallel((dir / "m.src").string(), (dir / "m.tgt").string(), sv2, tv2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line count mismatch"), std::string::npos);
  }

  write_lines((dir / "e.src").string(), {});
  write_lines((dir / "e.tgt").string(), {});
  try {
    read_parallel((dir / "e.src").string(), (dir / "e.tgt").string(), sv2, tv2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(Synthetic, DefaultSizesAndDisjointSplits) {
  const SyntheticTask t = generate_synthetic_task(SyntheticTaskSpec{});
  EXPECT_EQ(t.ood_train.size(), 5000u);
  EXPECT_EQ(t.id_train.size(), 2000u);
  EXPECT_EQ(t.id_test.size(), 500u);
  std::set<TokenSeq> seen;
  for (const auto* c : {&t.ood_train, &t.id_train, &t.id_test}) {
    for (const auto& p : c->pairs) {
      EXPECT_TRUE(seen.insert(p.source).second);
      EXPECT_GE(p.target.size(), 1u);
    }
    validate(*c, t.src_vocab, t.tgt_vocab);
  }
}

TEST(Synthetic, MarkerSwapsFollowingPair) {
  SyntheticTaskSpec spec;
  spec.resolve();
  Rng rng(1);
  EXPECT_EQ(translate_words(spec, {"s55", "MRK", "s57", "s59"}, Domain::kOutOfDomain, rng),
            (std::vector<std::string>{"t55", "t59", "t57"}));
}

TEST(Synthetic, AmbiguousWordUsesInDomainSense) {
  const SyntheticTask t = generate_synthetic_task(SyntheticTaskSpec{});
  const TokenId s3 = t.src_vocab.encode("s3");
  const TokenId t3 = t.tgt_vocab.encode("t3");
  const TokenId t3p = t.tgt_vocab.encode("t3'");
  std::size_t with_s3 = 0;
  for (const auto& p : t.id_train.pairs) {
    EXPECT_EQ(std::count(p.target.begin(), p.target.end(), t3), 0);
    const auto n = std::count(p.source.begin(), p.source.end(), s3);
    if (n > 0) {
      ++with_s3;
      EXPECT_EQ(std::count(p.target.begin(), p.target.end(), t3p), n);
    }
  }
  EXPECT_GT(with_s3, 0u);
  for (const auto& [word, senses] : t.spec.ambiguous_senses()) EXPECT_NE(senses.first, senses.second);
}

TEST(Synthetic, PureFunctionOfSpec) {
  const SyntheticTask a = generate_synthetic_task(SyntheticTaskSpec{});
  const SyntheticTask b = generate_synthetic_task(SyntheticTaskSpec{});
  EXPECT_EQ(a.ood_train, b.ood_train);
  EXPECT_EQ(a.id_test, b.id_test);
  EXPECT_EQ(a.tgt_vocab, b.tgt_vocab);
  SyntheticTaskSpec other;
  other.seed = 18;
  EXPECT_NE(generate_synthetic_task(other).ood_train, a.ood_train);
}

TEST(Synthetic, ConfigRoundTripAndValidation) {
  SyntheticTaskSpec s;
  s.ood_train_size = 123;
  s.marker_prob = 0.125;
  s.resolve();
  s.id_overrides["s4"] = "u4";
  const SyntheticTaskSpec back = SyntheticTaskSpec::from_config(s.to_config());
  EXPECT_EQ(back.ood_train_size, 123);
  EXPECT_EQ(back.marker_prob, 0.125);
  EXPECT_EQ(back.id_overrides.at("s4"), "u4");

  SyntheticTaskSpec bad;
  bad.min_length = 1;
  EXPECT_THROW(bad.resolve(), Error);
  SyntheticTaskSpec same_sense;
  same_sense.resolve();
  same_sense.id_overrides["s2"] = same_sense.ood_lexicon["s2"];
  EXPECT_THROW(same_sense.validate(), Error);
}
