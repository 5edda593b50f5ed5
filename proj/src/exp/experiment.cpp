#include "chunkfb/exp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "chunkfb/error.hpp"
#include "chunkfb/seq2seq/checkpoint.hpp"
#include "chunkfb/seq2seq/train.hpp"

namespace chunkfb::exp {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

KeyValueConfig with_prefix(const KeyValueConfig& c, const std::string& prefix) {
  KeyValueConfig out;
  for (const auto& [k, v] : c.values()) out.set(prefix + k, v);
  return out;
}

KeyValueConfig strip_prefix(const KeyValueConfig& c, const std::string& prefix) {
  KeyValueConfig out;
  for (const auto& [k, v] : c.values()) {
    if (k.rfind(prefix, 0) == 0) out.set(k.substr(prefix.size()), v);
  }
  return out;
}

// Keys that change what a model learns; vocab sizes and seed are filled in
// by the pipeline.
KeyValueConfig model_key(const seq2seq::ModelConfig& m) {
  KeyValueConfig c = m.to_config();
  KeyValueConfig out;
  for (const auto& [k, v] : c.values()) {
    if (k != "model.seed" && k != "model.src_vocab_size" && k != "model.tgt_vocab_size") out.set(k, v);
  }
  return out;
}

std::vector<std::string> words_of(const text::Vocabulary& v, const text::TokenSeq& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(v.lookup(id));
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp);
    out << body;
  }
  fs::rename(tmp, path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_lines_atomic(const std::string& path, const std::vector<std::string>& lines) {
  std::string body;
  for (const auto& l : lines) body += l + "\n";
  write_text(path, body);
}

std::string train_log_tsv(const std::vector<seq2seq::EpochLog>& log) {
  std::string out = "epoch\tlr\tloss\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + "\t" + format_double(e.learning_rate) + "\t" + format_double(e.mean_loss) + "\n";
  }
  return out;
}

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.rfind("stage ", 0) == 0) throw;
    throw Error(std::string("stage ") + stage + ": " + what);
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + stage + ": " + e.what());
  }
}

}  // namespace

const char* row_scheme_name(RowScheme s) {
  switch (s) {
    case RowScheme::kBaseline: return "baseline";
    case RowScheme::kSelfTraining: return "self-training";
    case RowScheme::kSentSbleu: return "sent-sbleu";
    case RowScheme::kSentBinary: return "sent-binary";
    case RowScheme::kChunkMatch: return "chunk-match";
    case RowScheme::kChunkLcs: return "chunk-lcs";
    case RowScheme::kReference: return "reference-finetune";
  }
  return "?";
}

RowScheme parse_row_scheme(const std::string& name) {
  if (name == "baseline") return RowScheme::kBaseline;
  if (name == "self-training" || name == "none" || name == "all-ones") return RowScheme::kSelfTraining;
  if (name == "sent-sbleu") return RowScheme::kSentSbleu;
  if (name == "sent-binary") return RowScheme::kSentBinary;
  if (name == "chunk-match" || name == "match") return RowScheme::kChunkMatch;
  if (name == "chunk-lcs" || name == "lcs") return RowScheme::kChunkLcs;
  if (name == "reference-finetune" || name == "reference") return RowScheme::kReference;
  throw Error("unknown scheme: " + name);
}

bool uses_feedback(RowScheme s) { return s != RowScheme::kBaseline && s != RowScheme::kReference; }

feedback::Scheme feedback_scheme(RowScheme s) {
  switch (s) {
    case RowScheme::kSelfTraining: return feedback::Scheme::kAllOnes;
    case RowScheme::kSentSbleu: return feedback::Scheme::kSentSbleu;
    case RowScheme::kSentBinary: return feedback::Scheme::kSentBinary;
    case RowScheme::kChunkMatch: return feedback::Scheme::kMatch;
    case RowScheme::kChunkLcs: return feedback::Scheme::kLcs;
    default: break;
  }
  throw Error(std::string("scheme ") + row_scheme_name(s) + " has no feedback");
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.pretrain = seq2seq::ScheduleConfig{15, 16, 1.0, 4, 0.5, 0.05, 5.0};
  c.finetune = seq2seq::ScheduleConfig{10, 16, 0.1, 5, 0.5, 0.01, 5.0};
  return c;
}

void ExperimentConfig::validate() const {
  if (corpus_dir.empty()) {
    text::SyntheticTaskSpec t = task;
    t.resolve();
  }
  seq2seq::ModelConfig m = model;
  m.src_vocab_size = m.tgt_vocab_size = text::kNumReserved + 1;
  m.validate();
  for (const auto* s : {&pretrain, &finetune}) {
    if (s->epochs < 0 || s->batch_size < 1) throw Error("schedule: need epochs >= 0 and batch_size >= 1");
    if (!(s->base_lr > 0) || !(s->floor >= 0) || !(s->decay > 0 && s->decay <= 1)) {
      throw Error("schedule: need base_lr > 0, floor >= 0 and decay in (0,1]");
    }
  }
  feedback::validate(noise);
  if (!noise.is_clean() && !uses_feedback(scheme)) {
    throw Error(std::string("noise needs a feedback scheme, not ") + row_scheme_name(scheme));
  }
  if (!noise.is_clean() && scheme != RowScheme::kChunkLcs && scheme != RowScheme::kChunkMatch) {
    throw Error("noise injection needs binary chunk feedback (chunk-lcs or chunk-match)");
  }
  if (force_all_ones && !uses_feedback(scheme)) throw Error("force_all_ones needs a feedback scheme");
  if (beam < 1) throw Error("beam must be >= 1");
  if (output_dir.empty()) throw Error("output_dir must not be empty");
}

KeyValueConfig ExperimentConfig::to_config() const {
  KeyValueConfig c;
  if (corpus_dir.empty()) {
    c.merge(with_prefix(task.to_config(), "task."));
  } else {
    c.set("corpus_dir", corpus_dir);
  }
  c.merge(model_key(model));
  c.merge(pretrain.to_config("pretrain"));
  c.merge(finetune.to_config("finetune"));
  c.set("scheme", row_scheme_name(scheme));
  c.set("noise.under", format_double(noise.under_selection_ratio));
  c.set("noise.incorrect", format_double(noise.incorrect_selection_ratio));
  c.set("noise.random_unselected", noise.replace_unselected_with_random ? "true" : "false");
  c.set("noise.seed", std::to_string(noise.seed));
  c.set("force_all_ones", force_all_ones ? "true" : "false");
  c.set("beam", std::to_string(beam));
  c.set("output_dir", output_dir);
  c.set("master_seed", std::to_string(master_seed));
  return c;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& c, const ExperimentConfig& base) {
  ExperimentConfig e = base;
  KeyValueConfig task_cfg = base.task.to_config();
  task_cfg.merge(strip_prefix(c, "task."));
  e.task = text::SyntheticTaskSpec::from_config(task_cfg);
  e.corpus_dir = c.get("corpus_dir", base.corpus_dir);
  KeyValueConfig model_cfg = base.model.to_config();
  model_cfg.merge(c);
  e.model = seq2seq::ModelConfig::from_config(model_cfg);
  e.pretrain = seq2seq::ScheduleConfig::from_config(c, "pretrain", base.pretrain);
  e.finetune = seq2seq::ScheduleConfig::from_config(c, "finetune", base.finetune);
  if (c.has("scheme")) e.scheme = parse_row_scheme(c.get("scheme", ""));
  e.noise.under_selection_ratio = c.get_double("noise.under", base.noise.under_selection_ratio);
  e.noise.incorrect_selection_ratio = c.get_double("noise.incorrect", base.noise.incorrect_selection_ratio);
  e.noise.replace_unselected_with_random =
      c.get_bool("noise.random_unselected", base.noise.replace_unselected_with_random);
  e.noise.seed = c.get_uint64("noise.seed", base.noise.seed);
  e.force_all_ones = c.get_bool("force_all_ones", base.force_all_ones);
  e.beam = static_cast<int>(c.get_int("beam", base.beam));
  e.output_dir = c.get("output_dir", base.output_dir);
  e.master_seed = c.get_uint64("master_seed", base.master_seed);
  return e;
}

std::string ExperimentConfig::system_name() const {
  std::string name = row_scheme_name(scheme);
  if (force_all_ones) name += "[all-ones]";
  if (!noise.is_clean()) {
    std::ostringstream s;
    s << name << "[";
    bool first = true;
    if (noise.under_selection_ratio > 0) {
      s << "under=" << std::lround(100 * noise.under_selection_ratio) << "%";
      first = false;
    }
    if (noise.incorrect_selection_ratio > 0) {
      s << (first ? "" : ",") << "incorrect=" << std::lround(100 * noise.incorrect_selection_ratio) << "%";
      first = false;
    }
    if (noise.replace_unselected_with_random) s << (first ? "" : ",") << "random-unselected";
    s << "]";
    name = s.str();
  }
  return name;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stage_seed(std::uint64_t master, Stage stage) {
  return splitmix64(master * 1000 + static_cast<std::uint64_t>(stage));
}

bool ResultRow::operator==(const ResultRow& o) const {
  const auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  return system == o.system && same(bleu, o.bleu) && same(ter, o.ter) &&
         same(ambiguity_accuracy, o.ambiguity_accuracy) && same(marked_fraction, o.marked_fraction) &&
         seed == o.seed && checkpoint == o.checkpoint;
}

AmbiguityReport ambiguity_report(const text::SyntheticTaskSpec& task,
                                 const std::vector<std::vector<std::string>>& sources,
                                 const std::vector<std::vector<std::string>>& hypotheses) {
  if (sources.size() != hypotheses.size()) {
    throw Error("ambiguity_report: " + std::to_string(sources.size()) + " sources vs " +
                std::to_string(hypotheses.size()) + " hypotheses");
  }
  AmbiguityReport r;
  for (const auto& [word, senses] : task.ambiguous_senses()) {
    SenseAccuracy a;
    a.word = word;
    a.in_domain_sense = senses.second;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto n = static_cast<std::size_t>(std::count(sources[i].begin(), sources[i].end(), word));
      if (n == 0) continue;
      const auto m = static_cast<std::size_t>(std::count(hypotheses[i].begin(), hypotheses[i].end(), senses.second));
      a.occurrences += n;
      a.correct += std::min(n, m);
    }
    r.occurrences += a.occurrences;
    r.correct += a.correct;
    r.words.push_back(std::move(a));
  }
  return r;
}

std::string render_ambiguity(const AmbiguityReport& r) {
  std::ostringstream out;
  out << "word\tsense\toccurrences\tcorrect\taccuracy\n";
  char buf[32];
  for (const auto& w : r.words) {
    std::snprintf(buf, sizeof(buf), "%.1f", 100 * w.accuracy());
    out << w.word << "\t" << w.in_domain_sense << "\t" << w.occurrences << "\t" << w.correct << "\t" << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.1f", 100 * r.accuracy());
  out << "all\t-\t" << r.occurrences << "\t" << r.correct << "\t" << buf << "\n";
  return out.str();
}

std::vector<seq2seq::Hypothesis> translate(const Model& model, const std::vector<text::TokenSeq>& sources, int beam) {
  std::vector<seq2seq::Hypothesis> out(sources.size());
  if (beam > 1) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
      out[i] = model.decode_beam(sources[i], beam, seq2seq::default_max_length(sources[i].size()));
    }
    return out;
  }
  // Batches of similar length keep padding small.
  std::vector<std::size_t> order(sources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sources[a].size() < sources[b].size(); });
  constexpr std::size_t kBatch = 64;
  for (std::size_t start = 0; start < order.size(); start += kBatch) {
    std::vector<text::TokenSeq> batch;
    std::vector<int> lens;
    const std::size_t end = std::min(order.size(), start + kBatch);
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(sources[order[k]]);
      lens.push_back(seq2seq::default_max_length(sources[order[k]].size()));
    }
    auto hyps = model.decode_greedy(batch, lens);
    for (std::size_t k = start; k < end; ++k) out[order[k]] = std::move(hyps[k - start]);
  }
  return out;
}

std::string file_hash(const std::string& path) { return hex64(fnv1a64(read_text(path))); }

Pipeline::Pipeline(ExperimentConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {
  config_.validate();
}

void Pipeline::note(const std::string& msg) {
  if (log_ != nullptr) *log_ << msg << std::endl;
}

std::string Pipeline::stage_dir(const std::string& stage, const KeyValueConfig& key) {
  const std::string dir = config_.output_dir + "/" + stage + "-" + hex64(fnv1a64(key.to_string()));
  fs::create_directories(dir);
  const std::string cfg = dir + "/config.cfg";
  if (!fs::exists(cfg)) {
    KeyValueConfig resolved = config_.to_config();
    resolved.merge(with_prefix(key, "key."));
    write_text(cfg, resolved.to_string());
  }
  return dir;
}

std::string Pipeline::data_dir() {
  KeyValueConfig key;
  if (config_.corpus_dir.empty()) {
    key = with_prefix(config_.task.to_config(), "task.");
  } else {
    key.set("corpus_dir", fs::absolute(config_.corpus_dir).string());
  }
  return stage_dir("data", key);
}

const Dataset& Pipeline::data() {
  if (data_) return *data_;
  data_ = in_stage("gen-data", [&] {
    Dataset d;
    const std::string dir = data_dir();
    if (config_.corpus_dir.empty()) {
      text::SyntheticTask t = text::generate_synthetic_task(config_.task);
      d.src_vocab = std::move(t.src_vocab);
      d.tgt_vocab = std::move(t.tgt_vocab);
      d.ood_train = std::move(t.ood_train);
      d.id_train = std::move(t.id_train);
      d.id_test = std::move(t.id_test);
      d.task = std::move(t.spec);
    } else {
      const std::string& c = config_.corpus_dir;
      d.ood_train = text::read_parallel(c + "/ood_train.src", c + "/ood_train.tgt", d.src_vocab, d.tgt_vocab, true);
      d.id_train = text::read_parallel(c + "/id_train.src", c + "/id_train.tgt", d.src_vocab, d.tgt_vocab, true);
      d.id_test = text::read_parallel(c + "/id_test.src", c + "/id_test.tgt", d.src_vocab, d.tgt_vocab, false);
      d.id_train.domain = d.id_test.domain = text::Domain::kInDomain;
    }
    if (!fs::exists(dir + "/id_test.tgt")) {
      d.src_vocab.save(dir + "/src.vocab");
      d.tgt_vocab.save(dir + "/tgt.vocab");
      text::write_parallel(dir + "/ood_train.src", dir + "/ood_train.tgt", d.ood_train, d.src_vocab, d.tgt_vocab);
      text::write_parallel(dir + "/id_train.src", dir + "/id_train.tgt", d.id_train, d.src_vocab, d.tgt_vocab);
      text::write_parallel(dir + "/id_test.src", dir + "/id_test.tgt", d.id_test, d.src_vocab, d.tgt_vocab);
    }
    return d;
  });
  return *data_;
}

std::string Pipeline::baseline_dir() {
  KeyValueConfig key = model_key(config_.model);
  key.merge(config_.pretrain.to_config("pretrain"));
  key.set("parent", data_dir());
  key.set("master_seed", std::to_string(config_.master_seed));
  const std::string dir = stage_dir("pretrain", key);
  const std::string ckpt = dir + "/model.ckpt";
  if (fs::exists(ckpt)) return dir;
  in_stage("pretrain", [&] {
    const Dataset& d = data();
    seq2seq::ModelConfig mc = config_.model;
    mc.src_vocab_size = static_cast<int>(d.src_vocab.size());
    mc.tgt_vocab_size = static_cast<int>(d.tgt_vocab.size());
    mc.seed = stage_seed(config_.master_seed, Stage::kInit);
    Model model(mc);
    std::vector<seq2seq::WeightedExample> examples;
    for (const auto& p : d.ood_train.pairs) examples.push_back(seq2seq::example_from_pair(p));
    note("pretrain: " + std::to_string(examples.size()) + " pairs -> " + dir);
    const auto log = seq2seq::train(model, std::span<const seq2seq::WeightedExample>(examples), config_.pretrain,
                                    stage_seed(config_.master_seed, Stage::kPretrain),
                                    [&](const seq2seq::EpochLog& e) {
                                      note("  epoch " + std::to_string(e.epoch) + " lr " +
                                           format_double(e.learning_rate) + " loss " + format_double(e.mean_loss));
                                    });
    write_text(dir + "/train_log.tsv", train_log_tsv(log));
    const seq2seq::ModelVocabs vocabs{d.src_vocab, d.tgt_vocab};
    seq2seq::save_model(ckpt + ".tmp", model, &vocabs);
    fs::rename(ckpt + ".tmp", ckpt);
    return 0;
  });
  return dir;
}

std::string Pipeline::translate_dir() {
  KeyValueConfig key;
  key.set("parent", baseline_dir());
  key.set("beam", std::to_string(config_.beam));
  const std::string dir = stage_dir("translate", key);
  const std::string out = dir + "/id_train.hyp";
  if (fs::exists(out)) return dir;
  in_stage("translate", [&] {
    const Dataset& d = data();
    const auto loaded = seq2seq::load_model<float>(baseline_checkpoint());
    std::vector<text::TokenSeq> sources;
    for (const auto& p : d.id_train.pairs) sources.push_back(p.source);
    note("translate: " + std::to_string(sources.size()) + " in-domain sources -> " + dir);
    const auto hyps = translate(loaded.model, sources, config_.beam);
    std::vector<std::string> lines;
    for (const auto& h : hyps) lines.push_back(d.tgt_vocab.decode(h.tokens));
    write_lines_atomic(out, lines);
    return 0;
  });
  return dir;
}

std::uint64_t Pipeline::noise_seed() const {
  if (config_.noise.seed != 0) return config_.noise.seed;
  feedback::NoiseSpec n = config_.noise;
  n.seed = 0;
  return splitmix64(stage_seed(config_.master_seed, Stage::kNoise) ^ fnv1a64(n.tag()));
}

std::string Pipeline::feedback_dir() {
  if (!uses_feedback(config_.scheme)) {
    throw Error(std::string("scheme ") + row_scheme_name(config_.scheme) + " has no feedback stage");
  }
  KeyValueConfig key;
  key.set("parent", translate_dir());
  key.set("scheme", row_scheme_name(config_.scheme));
  if (config_.force_all_ones) key.set("force_all_ones", "true");
  feedback::NoiseSpec noise = config_.noise;
  if (!noise.is_clean()) {
    noise.seed = noise_seed();
    key.set("noise", noise.tag());
  }
  const std::string dir = stage_dir("feedback", key);
  const std::string out = dir + "/feedback.jsonl";
  if (fs::exists(out)) return dir;
  in_stage("make-feedback", [&] {
    const Dataset& d = data();
    const auto lines = text::read_lines(translate_dir() + "/id_train.hyp");
    if (lines.size() != d.id_train.size()) throw Error("hypothesis count does not match id_train");
    std::vector<feedback::FeedbackRecord> records;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto hyp = d.tgt_vocab.encode_line(lines[i]);
      if (hyp.empty()) {
        ++dropped;
        continue;
      }
      const auto& pair = d.id_train.pairs[i];
      auto r = feedback::make_feedback(feedback_scheme(config_.scheme), pair.source, hyp, pair.target);
      if (config_.force_all_ones) r.weights = feedback::all_ones(hyp);
      if (!noise.is_clean()) r = feedback::apply_noise(r, noise, d.tgt_vocab.size(), i);
      records.push_back(std::move(r));
    }
    if (records.empty()) throw Error("every hypothesis is empty; the baseline only emits end of sentence");
    note("make-feedback: " + std::to_string(records.size()) + " records (" + std::to_string(dropped) +
         " empty hypotheses dropped) -> " + dir);
    feedback::write_jsonl(out + ".tmp", records, d.src_vocab, d.tgt_vocab);
    fs::rename(out + ".tmp", out);
    return 0;
  });
  return dir;
}

std::vector<feedback::FeedbackRecord> Pipeline::feedback_records() {
  const std::string path = feedback_path();
  const Dataset& d = data();
  return feedback::read_jsonl(path, d.src_vocab, d.tgt_vocab);
}

std::string Pipeline::finetune_dir() {
  KeyValueConfig key = config_.finetune.to_config("finetune");
  if (config_.scheme == RowScheme::kReference) {
    key.set("parent", baseline_dir());
    key.set("data", "reference");
  } else {
    key.set("parent", feedback_dir());
  }
  const std::string dir = stage_dir("finetune", key);
  const std::string ckpt = dir + "/model.ckpt";
  if (fs::exists(ckpt)) return dir;
  in_stage("finetune", [&] {
    const Dataset& d = data();
    auto loaded = seq2seq::load_model<float>(baseline_checkpoint());
    std::vector<seq2seq::WeightedExample> examples;
    if (config_.scheme == RowScheme::kReference) {
      for (const auto& p : d.id_train.pairs) examples.push_back(seq2seq::example_from_pair(p));
    } else {
      for (const auto& r : feedback_records()) examples.push_back(seq2seq::example_from_feedback(r));
    }
    note("finetune " + config_.system_name() + ": " + std::to_string(examples.size()) + " examples -> " + dir);
    const auto log = seq2seq::train(loaded.model, std::span<const seq2seq::WeightedExample>(examples),
                                    config_.finetune, stage_seed(config_.master_seed, Stage::kFinetune),
                                    [&](const seq2seq::EpochLog& e) {
                                      note("  epoch " + std::to_string(e.epoch) + " lr " +
                                           format_double(e.learning_rate) + " loss " + format_double(e.mean_loss));
                                    });
    write_text(dir + "/train_log.tsv", train_log_tsv(log));
    const seq2seq::ModelVocabs vocabs{d.src_vocab, d.tgt_vocab};
    seq2seq::save_model(ckpt + ".tmp", loaded.model, &vocabs);
    fs::rename(ckpt + ".tmp", ckpt);
    return 0;
  });
  return dir;
}

std::string Pipeline::final_checkpoint() {
  if (config_.scheme == RowScheme::kBaseline) return baseline_checkpoint();
  return finetune_dir() + "/model.ckpt";
}

ResultRow Pipeline::evaluate_checkpoint(const std::string& checkpoint, const std::string& system) {
  return in_stage("evaluate", [&] {
    const Dataset& d = data();
    const std::string hash = file_hash(checkpoint);
    KeyValueConfig key;
    key.set("checkpoint", hash);
    key.set("data", data_dir());
    key.set("beam", std::to_string(config_.beam));
    const std::string dir = stage_dir("eval", key);

    const auto loaded = seq2seq::load_model<float>(checkpoint);
    std::vector<text::TokenSeq> sources;
    for (const auto& p : d.id_test.pairs) sources.push_back(p.source);
    const auto hyps = translate(loaded.model, sources, config_.beam);

    std::vector<std::string> hyp_lines, ref_lines;
    std::vector<std::vector<std::string>> src_words, hyp_words;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      hyp_lines.push_back(d.tgt_vocab.decode(hyps[i].tokens));
      ref_lines.push_back(d.tgt_vocab.decode(d.id_test.pairs[i].target));
      src_words.push_back(words_of(d.src_vocab, d.id_test.pairs[i].source));
      hyp_words.push_back(words_of(d.tgt_vocab, hyps[i].tokens));
    }
    const auto report = metrics::evaluate(hyp_lines, ref_lines);
    write_lines_atomic(dir + "/id_test.hyp", hyp_lines);
    write_text(dir + "/report.tsv", metrics::tsv_header() + "\n" + metrics::to_tsv_row(report) + "\n");

    ResultRow row;
    row.system = system;
    row.bleu = report.bleu_percent;
    row.ter = report.ter_percent;
    row.ambiguity_accuracy = kNaN;
    if (d.task) {
      const auto amb = ambiguity_report(*d.task, src_words, hyp_words);
      write_text(dir + "/ambiguity.tsv", render_ambiguity(amb));
      row.ambiguity_accuracy = 100 * amb.accuracy();
    } else {
      note("ambiguity report omitted: external corpora declare no ambiguous words");
    }
    row.marked_fraction = kNaN;
    row.seed = config_.master_seed;
    row.checkpoint = hash;
    note("evaluate " + system + ": BLEU " + format_double(row.bleu) + " TER " + format_double(row.ter));
    return row;
  });
}

ResultRow Pipeline::run() {
  const std::string ckpt = final_checkpoint();
  ResultRow row = evaluate_checkpoint(ckpt, config_.system_name());
  if (uses_feedback(config_.scheme)) row.marked_fraction = feedback::selection_stats(feedback_records()).marked_fraction;
  return row;
}

Table1 run_table1(const ExperimentConfig& base, std::ostream* log) {
  Table1 t;
  for (RowScheme s : {RowScheme::kBaseline, RowScheme::kSelfTraining, RowScheme::kSentSbleu, RowScheme::kSentBinary,
                      RowScheme::kChunkMatch, RowScheme::kChunkLcs, RowScheme::kReference}) {
    ExperimentConfig c = base;
    c.scheme = s;
    c.noise = {};
    c.force_all_ones = false;
    Pipeline p(c, log);
    const ResultRow row = p.run();
    if (s == RowScheme::kReference) {
      t.reference = row;
    } else {
      t.rows.push_back(row);
    }
    if (s == RowScheme::kBaseline) t.baseline_checkpoint = row.checkpoint;
  }
  return t;
}

Table2 run_table2(const ExperimentConfig& base, std::ostream* log) {
  struct Variant {
    const char* label;
    double under;
    double incorrect;
    bool random;
  };
  const Variant variants[] = {
      {"chunk-lcs", 0, 0, false},           {"under 25%", 0.25, 0, false},
      {"under 50%", 0.5, 0, false},         {"under 75%", 0.75, 0, false},
      {"incorrect 10%", 0, 0.1, false},     {"incorrect 25%", 0, 0.25, false},
      {"incorrect 50%", 0, 0.5, false},     {"under 25% + incorrect 10%", 0.25, 0.1, false},
      {"random unselected", 0, 0, true},
  };
  Table2 t;
  for (const auto& v : variants) {
    ExperimentConfig c = base;
    c.scheme = RowScheme::kChunkLcs;
    c.force_all_ones = false;
    c.noise = {};
    c.noise.under_selection_ratio = v.under;
    c.noise.incorrect_selection_ratio = v.incorrect;
    c.noise.replace_unselected_with_random = v.random;
    Pipeline p(c, log);
    t.rows.push_back(p.run());
    t.labels.push_back(v.label);
  }
  return t;
}

std::vector<ResultRow> mean_rows(const std::vector<std::vector<ResultRow>>& per_seed) {
  if (per_seed.empty()) return {};
  std::vector<ResultRow> out = per_seed.front();
  for (std::size_t s = 1; s < per_seed.size(); ++s) {
    if (per_seed[s].size() != out.size()) throw Error("mean_rows: seeds have different row counts");
  }
  const double n = static_cast<double>(per_seed.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double bleu = 0, ter = 0, amb = 0, marked = 0;
    for (const auto& rows : per_seed) {
      bleu += rows[i].bleu;
      ter += rows[i].ter;
      amb += rows[i].ambiguity_accuracy;
      marked += rows[i].marked_fraction;
    }
    out[i].bleu = bleu / n;
    out[i].ter = ter / n;
    out[i].ambiguity_accuracy = amb / n;
    out[i].marked_fraction = marked / n;
    out[i].seed = 0;
    out[i].checkpoint = "mean";
  }
  return out;
}

}  // namespace chunkfb::exp
