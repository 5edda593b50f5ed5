#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "chunkfb/exp/experiment.hpp"
#include "chunkfb/exp/report.hpp"

namespace fs = std::filesystem;
using namespace chunkfb;
using namespace chunkfb::exp;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// A few seconds per row on one core.
ExperimentConfig tiny(const std::string& dir) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.task.ood_train_size = 150;
  c.task.id_train_size = 60;
  c.task.id_test_size = 30;
  c.model.embedding_size = 16;
  c.model.encoder_hidden = 16;
  c.model.decoder_hidden = 16;
  c.model.attention_hidden = 8;
  c.pretrain.epochs = 12;
  c.pretrain.batch_size = 4;
  c.pretrain.decay_start = 100;
  c.finetune.epochs = 1;
  c.output_dir = dir;
  return c;
}

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chunkfb_exp_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST(RowSchemes, NamesAndAliases) {
  for (RowScheme s : {RowScheme::kBaseline, RowScheme::kSelfTraining, RowScheme::kSentSbleu, RowScheme::kSentBinary,
                      RowScheme::kChunkMatch, RowScheme::kChunkLcs, RowScheme::kReference}) {
    EXPECT_EQ(parse_row_scheme(row_scheme_name(s)), s);
  }
  EXPECT_EQ(parse_row_scheme("none"), RowScheme::kSelfTraining);
  EXPECT_EQ(parse_row_scheme("lcs"), RowScheme::kChunkLcs);
  EXPECT_THROW(parse_row_scheme("x"), Error);
}

TEST(ExperimentConfigs, RoundTripAndValidation) {
  ExperimentConfig c = tiny("somewhere");
  c.scheme = RowScheme::kChunkMatch;
  c.noise.under_selection_ratio = 0.5;
  c.master_seed = 0xffffffffffffff01ull;
  c.beam = 3;
  const ExperimentConfig back = ExperimentConfig::from_config(c.to_config());
  EXPECT_EQ(back.to_config().to_string(), c.to_config().to_string());
  EXPECT_EQ(back.master_seed, c.master_seed);
  EXPECT_EQ(back.system_name(), "chunk-match[under=50%]");

  ExperimentConfig bad = c;
  bad.scheme = RowScheme::kSentSbleu;
  EXPECT_THROW(bad.validate(), Error);
  bad = tiny("x");
  bad.scheme = RowScheme::kReference;
  bad.force_all_ones = true;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Seeds, StagesAreDistinct) {
  EXPECT_NE(stage_seed(1, Stage::kInit), stage_seed(1, Stage::kPretrain));
  EXPECT_NE(stage_seed(1, Stage::kInit), stage_seed(2, Stage::kInit));
  EXPECT_EQ(stage_seed(5, Stage::kNoise), splitmix64(5 * 1000 + 404));
}

TEST(Report, TsvRoundTrip) {
  EXPECT_EQ(render_tsv({}), "system\tbleu\tter\tambiguity_acc\tmarked_fraction\tseed\tcheckpoint\n");
  EXPECT_TRUE(parse_tsv(render_tsv({})).empty());
  const std::vector<ResultRow> rows{{"baseline", 37.25, 40.125, 12.5, kNaN, 1, "00ab"},
                                    {"chunk-lcs", 1.0 / 3.0, 0.1, kNaN, 0.4, 18446744073709551615ull, "ff"}};
  EXPECT_EQ(parse_tsv(render_tsv(rows)), rows);
  const std::string table = render_table(rows);
  EXPECT_NE(table.find("37.2"), std::string::npos);
  EXPECT_NE(table.find("40.1"), std::string::npos);
  EXPECT_NE(table.find("40.0"), std::string::npos);  // marked fraction as percent
}

TEST(Report, MeanRows) {
  const std::vector<std::vector<ResultRow>> per_seed{{{"a", 10, 20, 30, kNaN, 1, "x"}}, {{"a", 20, 30, 50, kNaN, 2, "y"}}};
  const auto mean = mean_rows(per_seed);
  ASSERT_EQ(mean.size(), 1u);
  EXPECT_DOUBLE_EQ(mean[0].bleu, 15);
  EXPECT_DOUBLE_EQ(mean[0].ter, 25);
  EXPECT_DOUBLE_EQ(mean[0].ambiguity_accuracy, 40);
  EXPECT_TRUE(std::isnan(mean[0].marked_fraction));
}

TEST(Ambiguity, CountMatched) {
  text::SyntheticTaskSpec spec;
  spec.resolve();
  const std::vector<std::vector<std::string>> src{{"s1", "s50", "s1"}, {"s2"}, {"s60"}};
  const std::vector<std::vector<std::string>> hyp{{"t1'", "t50", "t1"}, {"t2'", "t2'"}, {"t60"}};
  const AmbiguityReport r = ambiguity_report(spec, src, hyp);
  EXPECT_EQ(r.occurrences, 3u);
  EXPECT_EQ(r.correct, 2u);
  EXPECT_EQ(r.words[1].occurrences, 2u);
  EXPECT_EQ(r.words[1].correct, 1u);
  EXPECT_EQ(r.words[2].correct, 1u);
  EXPECT_THROW(ambiguity_report(spec, src, {}), Error);
}

TEST(Pipeline, RowIsReproducibleFromScratch) {
  ExperimentConfig a = tiny(fresh_dir("det_a"));
  ExperimentConfig b = tiny(fresh_dir("det_b"));
  const ResultRow ra = Pipeline(a).run();
  const ResultRow rb = Pipeline(b).run();
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(file_hash(Pipeline(a).final_checkpoint()), file_hash(Pipeline(b).final_checkpoint()));
  // Persisted artifacts are reused on a rerun.
  EXPECT_EQ(Pipeline(a).run(), ra);
  const KeyValueConfig saved = KeyValueConfig::load(Pipeline(a).finetune_dir() + "/config.cfg");
  EXPECT_EQ(ExperimentConfig::from_config(saved).to_config().to_string(), a.to_config().to_string());
}

TEST(Pipeline, SelfTrainingEqualsAllOnesChunkFeedback) {
  const std::string dir = fresh_dir("self");
  ExperimentConfig self = tiny(dir);
  self.scheme = RowScheme::kSelfTraining;
  ExperimentConfig forced = tiny(dir);
  forced.scheme = RowScheme::kChunkLcs;
  forced.force_all_ones = true;
  Pipeline ps(self), pf(forced);
  EXPECT_NE(ps.final_checkpoint(), pf.final_checkpoint());
  EXPECT_EQ(file_hash(ps.final_checkpoint()), file_hash(pf.final_checkpoint()));
}

TEST(Pipeline, ZeroUnderSelectionEqualsCleanRow) {
  const std::string dir = fresh_dir("under0");
  ExperimentConfig clean = tiny(dir);
  ExperimentConfig zero = tiny(dir);
  zero.noise.under_selection_ratio = 0.0;
  zero.noise.incorrect_selection_ratio = 0.0;
  ResultRow a = Pipeline(clean).run();
  ResultRow b = Pipeline(zero).run();
  EXPECT_EQ(a, b);
}

TEST(Pipeline, BaselineSharesPretrainedCheckpoint) {
  const std::string dir = fresh_dir("shared");
  ExperimentConfig base = tiny(dir);
  base.scheme = RowScheme::kBaseline;
  ExperimentConfig lcs = tiny(dir);
  ExperimentConfig sb = tiny(dir);
  sb.scheme = RowScheme::kSentSbleu;
  Pipeline pb(base), pl(lcs), ps(sb);
  EXPECT_EQ(pb.final_checkpoint(), pb.baseline_checkpoint());
  EXPECT_EQ(pl.baseline_checkpoint(), pb.baseline_checkpoint());
  EXPECT_EQ(ps.baseline_checkpoint(), pb.baseline_checkpoint());
  EXPECT_EQ(pl.translate_dir(), ps.translate_dir());
}

TEST(Pipeline, ExternalCorpusMissingFilesIsStageError) {
  ExperimentConfig c = tiny(fresh_dir("ext"));
  c.corpus_dir = "/nonexistent/corpus";
  try {
    Pipeline(c).data();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage gen-data"), std::string::npos) << e.what();
  }
}
