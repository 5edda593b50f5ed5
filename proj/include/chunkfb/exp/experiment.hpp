#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chunkfb/config.hpp"
#include "chunkfb/feedback/feedback.hpp"
#include "chunkfb/metrics/evaluate.hpp"
#include "chunkfb/seq2seq/config.hpp"
#include "chunkfb/seq2seq/model.hpp"
#include "chunkfb/textcorpus/synthetic.hpp"

namespace chunkfb::exp {

using Model = seq2seq::Seq2Seq<float>;

/// What a pipeline row trains on after pretraining.
enum class RowScheme { kBaseline, kSelfTraining, kSentSbleu, kSentBinary, kChunkMatch, kChunkLcs, kReference };

const char* row_scheme_name(RowScheme s);
RowScheme parse_row_scheme(const std::string& name);
bool uses_feedback(RowScheme s);
feedback::Scheme feedback_scheme(RowScheme s);

struct ExperimentConfig {
  text::SyntheticTaskSpec task;
  /// Directory with {ood_train,id_train,id_test}.{src,tgt}; replaces the
  /// synthetic task when set.
  std::string corpus_dir;
  seq2seq::ModelConfig model;
  seq2seq::ScheduleConfig pretrain;
  seq2seq::ScheduleConfig finetune;
  RowScheme scheme = RowScheme::kChunkLcs;
  feedback::NoiseSpec noise;  // seed 0 derives a per-row seed from the master seed
  bool force_all_ones = false;  // overwrite synthesized weights with 1
  int beam = 1;
  std::string output_dir = "runs";
  std::uint64_t master_seed = 1;

  static ExperimentConfig defaults();
  void validate() const;
  KeyValueConfig to_config() const;
  /// Keys missing from `cfg` keep the values of `base`.
  static ExperimentConfig from_config(const KeyValueConfig& cfg, const ExperimentConfig& base = defaults());
  std::string system_name() const;
};

enum class Stage : std::uint64_t { kInit = 101, kPretrain = 202, kFinetune = 303, kNoise = 404 };

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stage_seed(std::uint64_t master, Stage stage);

struct Dataset {
  text::Vocabulary src_vocab;
  text::Vocabulary tgt_vocab;
  text::ParallelCorpus ood_train;
  text::ParallelCorpus id_train;
  text::ParallelCorpus id_test;
  std::optional<text::SyntheticTaskSpec> task;  // resolved; absent for external corpora
};

struct ResultRow {
  std::string system;
  double bleu = 0;
  double ter = 0;
  double ambiguity_accuracy = 0;  // percent; NaN when unavailable
  double marked_fraction = 0;     // NaN for rows without feedback
  std::uint64_t seed = 0;
  std::string checkpoint;         // content hash of the evaluated checkpoint

  bool operator==(const ResultRow& o) const;
};

struct SenseAccuracy {
  std::string word;
  std::string in_domain_sense;
  std::size_t occurrences = 0;
  std::size_t correct = 0;
  double accuracy() const { return occurrences == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(occurrences); }
};

struct AmbiguityReport {
  std::vector<SenseAccuracy> words;
  std::size_t occurrences = 0;
  std::size_t correct = 0;
  double accuracy() const { return occurrences == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(occurrences); }
};

/// In-domain sense accuracy of the ambiguous source words. Occurrences are
/// matched by counts: a sentence with n occurrences of word s and m tokens of
/// its in-domain sense in the hypothesis earns min(n, m).
AmbiguityReport ambiguity_report(const text::SyntheticTaskSpec& task,
                                 const std::vector<std::vector<std::string>>& sources,
                                 const std::vector<std::vector<std::string>>& hypotheses);
std::string render_ambiguity(const AmbiguityReport& r);

/// Batched greedy decoding (or beam search when beam > 1) with max length
/// 2J + 5.
std::vector<seq2seq::Hypothesis> translate(const Model& model, const std::vector<text::TokenSeq>& sources, int beam = 1);

/// Runs the stages of one configuration, reusing persisted artifacts. Every
/// stage directory is named after a hash of everything it depends on and
/// holds its resolved config.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config, std::ostream* log = nullptr);

  const ExperimentConfig& config() const { return config_; }

  const Dataset& data();
  std::string data_dir();
  std::string baseline_dir();
  std::string translate_dir();
  std::string feedback_dir();
  std::string finetune_dir();

  /// Checkpoint evaluated by this row.
  std::string final_checkpoint();
  std::string baseline_checkpoint() { return baseline_dir() + "/model.ckpt"; }
  std::string feedback_path() { return feedback_dir() + "/feedback.jsonl"; }

  std::vector<feedback::FeedbackRecord> feedback_records();

  ResultRow run();

  /// Evaluates any checkpoint on the in-domain test split.
  ResultRow evaluate_checkpoint(const std::string& checkpoint, const std::string& system);

 private:
  std::string stage_dir(const std::string& stage, const KeyValueConfig& key);
  std::uint64_t noise_seed() const;
  void note(const std::string& msg);

  ExperimentConfig config_;
  std::ostream* log_;
  std::optional<Dataset> data_;
};

std::string file_hash(const std::string& path);

struct Table1 {
  std::vector<ResultRow> rows;  // six rows, Table 1 order
  ResultRow reference;          // upper bound
  std::string baseline_checkpoint;
};

/// One seed of Table 1; all rows share one pretrained checkpoint.
Table1 run_table1(const ExperimentConfig& base, std::ostream* log = nullptr);

struct Table2 {
  std::vector<ResultRow> rows;  // clean chunk-lcs first
  std::vector<std::string> labels;
};

/// Noise robustness rows on the chunk-lcs feedback of `base`.
Table2 run_table2(const ExperimentConfig& base, std::ostream* log = nullptr);

/// Element-wise mean across seeds; rows are matched by position.
std::vector<ResultRow> mean_rows(const std::vector<std::vector<ResultRow>>& per_seed);

}  // namespace chunkfb::exp
