// Command line front end for the partial-feedback lab.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chunkfb/error.hpp"
#include "chunkfb/exp/experiment.hpp"
#include "chunkfb/exp/report.hpp"
#include "chunkfb/feedback/feedback.hpp"
#include "chunkfb/metrics/evaluate.hpp"
#include "chunkfb/seq2seq/checkpoint.hpp"
#include "chunkfb/seq2seq/train.hpp"
#include "chunkfb/textcorpus/bpe.hpp"

using namespace chunkfb;
namespace fs = std::filesystem;

namespace {

// Experiment flags shared by the pipeline subcommands. Keys given in the
// config file win over flags.
struct ExperimentFlags {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::uint64_t seed = 1;
  std::string scheme = "chunk-lcs";
  int pretrain_epochs = -1;
  int finetune_epochs = -1;
  double finetune_lr = -1;
  double under = 0;
  double incorrect = 0;
  bool random_unselected = false;
  int beam = 1;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value experiment config; its keys override flags")
        ->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "extra key=value setting (repeatable)");
    app->add_option("--output-dir", output_dir, "artifact root (default $CHUNKFB_OUTPUT or ./runs)");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--scheme", scheme,
                    "baseline, self-training, sent-sbleu, sent-binary, chunk-match, chunk-lcs, reference-finetune");
    app->add_option("--pretrain-epochs", pretrain_epochs);
    app->add_option("--finetune-epochs", finetune_epochs);
    app->add_option("--finetune-lr", finetune_lr);
    app->add_option("--under", under, "under-selection ratio");
    app->add_option("--incorrect", incorrect, "incorrect-selection ratio");
    app->add_flag("--random-unselected", random_unselected, "replace unselected tokens with random ids");
    app->add_option("--beam", beam);
    app->add_flag("--quiet", quiet, "no progress log on stderr");
  }

  exp::ExperimentConfig resolve() const {
    exp::ExperimentConfig c = exp::ExperimentConfig::defaults();
    if (const char* env = std::getenv("CHUNKFB_OUTPUT")) c.output_dir = env;
    if (!output_dir.empty()) c.output_dir = output_dir;
    c.master_seed = seed;
    c.scheme = exp::parse_row_scheme(scheme);
    if (pretrain_epochs >= 0) c.pretrain.epochs = pretrain_epochs;
    if (finetune_epochs >= 0) c.finetune.epochs = finetune_epochs;
    if (finetune_lr > 0) c.finetune.base_lr = finetune_lr;
    c.noise.under_selection_ratio = under;
    c.noise.incorrect_selection_ratio = incorrect;
    c.noise.replace_unselected_with_random = random_unselected;
    c.beam = beam;
    KeyValueConfig file;
    for (const auto& kv : overrides) file.merge(KeyValueConfig::parse(kv));
    if (!config_file.empty()) file.merge(KeyValueConfig::load(config_file));
    c = exp::ExperimentConfig::from_config(file, c);
    c.validate();
    return c;
  }

  std::ostream* log() const { return quiet ? nullptr : &std::cerr; }
};

void write_file(const std::string& path, const std::string& body) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << body;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

seq2seq::ModelVocabs checkpoint_vocabs(const seq2seq::LoadedModel<float>& m, const std::string& path) {
  if (!m.vocabs) throw Error("checkpoint " + path + " has no embedded vocabularies");
  return *m.vocabs;
}

std::vector<text::TokenSeq> encode_lines(const text::Vocabulary& v, const std::vector<std::string>& lines) {
  std::vector<text::TokenSeq> out;
  for (const auto& l : lines) out.push_back(v.encode_line(l));
  return out;
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chunkfb: learning from chunk-level partial feedback in NMT"};
  app.require_subcommand(1);

  // gen-data
  ExperimentFlags gen_flags;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic task corpora");
  gen_flags.attach(gen);

  // learn-bpe
  std::vector<std::string> bpe_inputs;
  std::size_t bpe_merges = 1000;
  std::string bpe_out, bpe_apply_in, bpe_apply_out;
  auto* bpe = app.add_subcommand("learn-bpe", "learn BPE merges from text files");
  bpe->add_option("--input", bpe_inputs, "training text files")->required()->check(CLI::ExistingFile);
  bpe->add_option("--merges", bpe_merges, "number of merge operations");
  bpe->add_option("--output", bpe_out, "merges file")->required();
  bpe->add_option("--apply", bpe_apply_in, "also segment this file")->check(CLI::ExistingFile);
  bpe->add_option("--apply-output", bpe_apply_out, "segmented output for --apply");

  // pretrain
  ExperimentFlags pre_flags;
  auto* pre = app.add_subcommand("pretrain", "train the out-of-domain baseline");
  pre_flags.attach(pre);

  // translate
  std::string tr_ckpt, tr_in, tr_out, tr_logprobs;
  int tr_beam = 1;
  auto* tr = app.add_subcommand("translate", "decode source lines with a checkpoint");
  tr->add_option("--checkpoint", tr_ckpt)->required()->check(CLI::ExistingFile);
  tr->add_option("--input", tr_in, "source lines")->required()->check(CLI::ExistingFile);
  tr->add_option("--output", tr_out, "hypothesis lines")->required();
  tr->add_option("--logprobs", tr_logprobs, "JSONL sidecar with per-token log-probabilities");
  tr->add_option("--beam", tr_beam);

  // make-feedback
  std::string mf_ckpt, mf_src, mf_hyp, mf_ref, mf_scheme = "chunk-lcs", mf_out;
  auto* mf = app.add_subcommand("make-feedback", "synthesize feedback weights from references");
  mf->add_option("--checkpoint", mf_ckpt, "checkpoint providing the vocabularies")->required()->check(CLI::ExistingFile);
  mf->add_option("--src", mf_src)->required()->check(CLI::ExistingFile);
  mf->add_option("--hyp", mf_hyp)->required()->check(CLI::ExistingFile);
  mf->add_option("--ref", mf_ref)->required()->check(CLI::ExistingFile);
  mf->add_option("--scheme", mf_scheme, "self-training, sent-sbleu, sent-binary, chunk-match, chunk-lcs");
  mf->add_option("--output", mf_out, "feedback JSONL")->required();

  // inject-noise
  std::string in_ckpt, in_in, in_out;
  feedback::NoiseSpec in_noise;
  in_noise.seed = 1;
  auto* inj = app.add_subcommand("inject-noise", "simulate user selection errors");
  inj->add_option("--checkpoint", in_ckpt, "checkpoint providing the vocabularies")->required()->check(CLI::ExistingFile);
  inj->add_option("--input", in_in, "feedback JSONL")->required()->check(CLI::ExistingFile);
  inj->add_option("--output", in_out, "noisy feedback JSONL")->required();
  inj->add_option("--under", in_noise.under_selection_ratio);
  inj->add_option("--incorrect", in_noise.incorrect_selection_ratio);
  inj->add_flag("--random-unselected", in_noise.replace_unselected_with_random);
  inj->add_option("--seed", in_noise.seed);

  // finetune
  std::string ft_ckpt, ft_feedback, ft_src, ft_ref, ft_out;
  std::uint64_t ft_seed = 1;
  seq2seq::ScheduleConfig ft_sched = exp::ExperimentConfig::defaults().finetune;
  auto* ft = app.add_subcommand("finetune", "continue training on weighted feedback or references");
  ft->add_option("--checkpoint", ft_ckpt)->required()->check(CLI::ExistingFile);
  ft->add_option("--feedback", ft_feedback, "feedback JSONL")->check(CLI::ExistingFile);
  ft->add_option("--src", ft_src, "reference fine-tuning source lines")->check(CLI::ExistingFile);
  ft->add_option("--ref", ft_ref, "reference fine-tuning target lines")->check(CLI::ExistingFile);
  ft->add_option("--output", ft_out, "output checkpoint")->required();
  ft->add_option("--seed", ft_seed);
  ft->add_option("--epochs", ft_sched.epochs);
  ft->add_option("--lr", ft_sched.base_lr);
  ft->add_option("--lr-floor", ft_sched.floor);
  ft->add_option("--decay-start", ft_sched.decay_start);
  ft->add_option("--batch-size", ft_sched.batch_size);

  // evaluate
  std::string ev_hyp, ev_ref, ev_ckpt, ev_src;
  auto* ev = app.add_subcommand("evaluate", "BLEU and TER of hypothesis lines");
  ev->add_option("--hyp", ev_hyp, "hypothesis lines")->check(CLI::ExistingFile);
  ev->add_option("--ref", ev_ref, "reference lines")->required()->check(CLI::ExistingFile);
  ev->add_option("--checkpoint", ev_ckpt, "decode --src first")->check(CLI::ExistingFile);
  ev->add_option("--src", ev_src)->check(CLI::ExistingFile);

  // table1 / table2
  ExperimentFlags t1_flags, t2_flags;
  int t1_seeds = 3, t2_seeds = 3;
  auto* t1 = app.add_subcommand("table1", "chunk-level vs sentence-level feedback");
  t1_flags.attach(t1);
  t1->add_option("--seeds", t1_seeds, "number of master seeds, starting at --seed");
  auto* t2 = app.add_subcommand("table2", "robustness to simulated user errors");
  t2_flags.attach(t2);
  t2->add_option("--seeds", t2_seeds, "number of master seeds, starting at --seed");

  // ambiguity
  ExperimentFlags amb_flags;
  std::string amb_ckpt;
  auto* amb = app.add_subcommand("ambiguity", "in-domain sense accuracy of ambiguous words");
  amb_flags.attach(amb);
  amb->add_option("--checkpoint", amb_ckpt, "defaults to the checkpoint of --scheme")->check(CLI::ExistingFile);

  // report
  std::vector<std::string> rep_inputs;
  auto* rep = app.add_subcommand("report", "render result TSV files; several files are averaged");
  rep->add_option("inputs", rep_inputs)->required()->check(CLI::ExistingFile);

  // run
  ExperimentFlags run_flags;
  auto* run = app.add_subcommand("run", "one pipeline row");
  run_flags.attach(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      exp::Pipeline p(gen_flags.resolve(), gen_flags.log());
      const auto& d = p.data();
      std::cout << p.data_dir() << "\n"
                << "ood_train " << d.ood_train.size() << "  id_train " << d.id_train.size() << "  id_test "
                << d.id_test.size() << "  src_vocab " << d.src_vocab.size() << "  tgt_vocab " << d.tgt_vocab.size()
                << "\n";
    } else if (bpe->parsed()) {
      std::vector<std::string> lines;
      for (const auto& f : bpe_inputs) {
        auto l = text::read_lines(f);
        lines.insert(lines.end(), l.begin(), l.end());
      }
      const auto model = text::learn_bpe(lines, bpe_merges);
      model.save(bpe_out);
      std::cout << model.merge_count() << " merges -> " << bpe_out << "\n";
      if (!bpe_apply_in.empty()) {
        if (bpe_apply_out.empty()) throw Error("--apply needs --apply-output");
        std::vector<std::string> seg;
        for (const auto& l : text::read_lines(bpe_apply_in)) seg.push_back(text::apply_bpe_line(model, l));
        text::write_lines(bpe_apply_out, seg);
      }
    } else if (pre->parsed()) {
      exp::Pipeline p(pre_flags.resolve(), pre_flags.log());
      std::cout << p.baseline_checkpoint() << "\n";
    } else if (tr->parsed()) {
      const auto m = seq2seq::load_model<float>(tr_ckpt);
      const auto vocabs = checkpoint_vocabs(m, tr_ckpt);
      const auto sources = encode_lines(vocabs.source, text::read_lines(tr_in));
      const auto hyps = exp::translate(m.model, sources, tr_beam);
      std::vector<std::string> lines;
      for (const auto& h : hyps) lines.push_back(vocabs.target.decode(h.tokens));
      text::write_lines(tr_out, lines);
      if (!tr_logprobs.empty()) {
        std::ofstream out(tr_logprobs);
        if (!out) throw Error("cannot write " + tr_logprobs);
        for (const auto& h : hyps) {
          nlohmann::ordered_json j;
          j["hyp"] = vocabs.target.decode(h.tokens);
          j["log_probs"] = h.log_probs;
          j["finished"] = h.finished;
          out << j.dump() << "\n";
        }
      }
    } else if (mf->parsed()) {
      const auto m = seq2seq::load_model<float>(mf_ckpt);
      const auto vocabs = checkpoint_vocabs(m, mf_ckpt);
      const auto src = encode_lines(vocabs.source, text::read_lines(mf_src));
      const auto hyp = encode_lines(vocabs.target, text::read_lines(mf_hyp));
      const auto ref = encode_lines(vocabs.target, text::read_lines(mf_ref));
      if (src.size() != hyp.size() || hyp.size() != ref.size()) throw Error("make-feedback: line counts differ");
      const auto scheme = feedback::parse_scheme(mf_scheme);
      std::vector<feedback::FeedbackRecord> records;
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (hyp[i].empty()) continue;
        records.push_back(feedback::make_feedback(scheme, src[i], hyp[i], ref[i]));
      }
      feedback::write_jsonl(mf_out, records, vocabs.source, vocabs.target);
      const auto stats = feedback::selection_stats(records);
      std::cout << records.size() << " records, marked fraction " << stats.marked_fraction << "\n";
    } else if (inj->parsed()) {
      const auto m = seq2seq::load_model<float>(in_ckpt);
      const auto vocabs = checkpoint_vocabs(m, in_ckpt);
      const auto records = feedback::read_jsonl(in_in, vocabs.source, vocabs.target);
      std::vector<feedback::FeedbackRecord> noisy;
      for (std::size_t i = 0; i < records.size(); ++i) {
        noisy.push_back(feedback::apply_noise(records[i], in_noise, vocabs.target.size(), i));
      }
      feedback::write_jsonl(in_out, noisy, vocabs.source, vocabs.target);
      std::cout << "marked fraction " << feedback::selection_stats(records).marked_fraction << " -> "
                << feedback::selection_stats(noisy).marked_fraction << "\n";
    } else if (ft->parsed()) {
      auto m = seq2seq::load_model<float>(ft_ckpt);
      auto vocabs = checkpoint_vocabs(m, ft_ckpt);
      std::vector<seq2seq::WeightedExample> examples;
      if (!ft_feedback.empty()) {
        for (const auto& r : feedback::read_jsonl(ft_feedback, vocabs.source, vocabs.target)) {
          examples.push_back(seq2seq::example_from_feedback(r));
        }
      } else if (!ft_src.empty() && !ft_ref.empty()) {
        const auto corpus = text::read_parallel(ft_src, ft_ref, vocabs.source, vocabs.target, false);
        for (const auto& p : corpus.pairs) examples.push_back(seq2seq::example_from_pair(p));
      } else {
        throw Error("finetune needs --feedback or --src with --ref");
      }
      seq2seq::train(m.model, std::span<const seq2seq::WeightedExample>(examples), ft_sched, ft_seed,
                     [](const seq2seq::EpochLog& e) {
                       std::cerr << "epoch " << e.epoch << " lr " << e.learning_rate << " loss " << e.mean_loss
                                 << "\n";
                     });
      seq2seq::save_model(ft_out, m.model, &vocabs);
      std::cout << ft_out << "\n";
    } else if (ev->parsed()) {
      std::vector<std::string> hyps;
      if (!ev_ckpt.empty()) {
        if (ev_src.empty()) throw Error("evaluate --checkpoint needs --src");
        const auto m = seq2seq::load_model<float>(ev_ckpt);
        const auto vocabs = checkpoint_vocabs(m, ev_ckpt);
        for (const auto& h : exp::translate(m.model, encode_lines(vocabs.source, text::read_lines(ev_src)))) {
          hyps.push_back(vocabs.target.decode(h.tokens));
        }
      } else if (!ev_hyp.empty()) {
        hyps = text::read_lines(ev_hyp);
      } else {
        throw Error("evaluate needs --hyp or --checkpoint with --src");
      }
      std::cout << metrics::to_summary(metrics::evaluate(hyps, text::read_lines(ev_ref)));
    } else if (t1->parsed()) {
      const auto base = t1_flags.resolve();
      std::vector<std::vector<exp::ResultRow>> per_seed;
      for (auto s : seed_list(base.master_seed, t1_seeds)) {
        auto c = base;
        c.master_seed = s;
        const auto t = exp::run_table1(c, t1_flags.log());
        auto rows = t.rows;
        rows.push_back(t.reference);
        write_file(base.output_dir + "/table1.seed" + std::to_string(s) + ".tsv", exp::render_tsv(rows));
        std::cout << "seed " << s << ": baseline checkpoint " << t.baseline_checkpoint << "\n";
        per_seed.push_back(rows);
      }
      const auto mean = exp::mean_rows(per_seed);
      write_file(base.output_dir + "/table1.tsv", exp::render_tsv(mean));
      const std::string table = exp::render_table(mean);
      write_file(base.output_dir + "/table1.txt", table);
      std::cout << "mean of " << per_seed.size() << " seeds\n" << table;
    } else if (t2->parsed()) {
      const auto base = t2_flags.resolve();
      std::vector<std::vector<exp::ResultRow>> per_seed;
      std::vector<std::string> labels;
      for (auto s : seed_list(base.master_seed, t2_seeds)) {
        auto c = base;
        c.master_seed = s;
        const auto t = exp::run_table2(c, t2_flags.log());
        auto self = c;
        self.scheme = exp::RowScheme::kSelfTraining;
        auto rows = t.rows;
        rows.push_back(exp::Pipeline(self, t2_flags.log()).run());
        labels = t.labels;
        labels.push_back("self-training");
        write_file(base.output_dir + "/table2.seed" + std::to_string(s) + ".tsv", exp::render_tsv(rows));
        per_seed.push_back(rows);
      }
      const auto mean = exp::mean_rows(per_seed);
      write_file(base.output_dir + "/table2.tsv", exp::render_tsv(mean));
      const std::string table = exp::render_table(mean, labels);
      write_file(base.output_dir + "/table2.txt", table);
      std::cout << "mean of " << per_seed.size() << " seeds\n" << table;
    } else if (amb->parsed()) {
      exp::Pipeline p(amb_flags.resolve(), amb_flags.log());
      const auto& d = p.data();
      if (!d.task) {
        std::cout << "ambiguity report unavailable: external corpora declare no ambiguous words\n";
        return 0;
      }
      const std::string ckpt = amb_ckpt.empty() ? p.final_checkpoint() : amb_ckpt;
      const auto m = seq2seq::load_model<float>(ckpt);
      std::vector<text::TokenSeq> sources;
      std::vector<std::vector<std::string>> src_words, hyp_words;
      for (const auto& pair : d.id_test.pairs) sources.push_back(pair.source);
      const auto hyps = exp::translate(m.model, sources, p.config().beam);
      for (std::size_t i = 0; i < hyps.size(); ++i) {
        src_words.push_back(text::split_tokens(d.src_vocab.decode(sources[i])));
        hyp_words.push_back(text::split_tokens(d.tgt_vocab.decode(hyps[i].tokens)));
      }
      std::cout << exp::render_ambiguity(exp::ambiguity_report(*d.task, src_words, hyp_words));
    } else if (rep->parsed()) {
      std::vector<std::vector<exp::ResultRow>> tables;
      for (const auto& f : rep_inputs) tables.push_back(exp::parse_tsv(read_file(f)));
      std::cout << exp::render_table(tables.size() == 1 ? tables.front() : exp::mean_rows(tables));
    } else if (run->parsed()) {
      exp::Pipeline p(run_flags.resolve(), run_flags.log());
      const auto row = p.run();
      std::cout << exp::render_tsv({row}) << exp::render_table({row});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
