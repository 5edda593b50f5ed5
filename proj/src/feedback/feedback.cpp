#include "chunkfb/feedback/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>
#include <set>

#include "chunkfb/error.hpp"
#include "chunkfb/metrics/bleu.hpp"
#include "chunkfb/metrics/lcs.hpp"
#include "chunkfb/random.hpp"

namespace chunkfb::feedback {

namespace {

void require_non_empty(const TokenSeq& hyp, const TokenSeq& ref, const char* op) {
  if (hyp.empty() || ref.empty()) throw Error(std::string(op) + ": empty hypothesis or reference");
}

void require_binary(const FeedbackRecord& r, const char* op) {
  check_record(r);
  if (!is_binary(r.weights)) throw Error(std::string(op) + ": non-binary weights");
}

std::vector<std::size_t> positions_with(const Weights& w, double value) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == value) out.push_back(i);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void check_record(const FeedbackRecord& r) {
  if (r.weights.size() != r.hypothesis.size()) {
    throw Error("feedback record: " + std::to_string(r.weights.size()) + " weights for " +
                std::to_string(r.hypothesis.size()) + " hypothesis tokens");
  }
}

bool is_binary(const Weights& w) {
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

Weights feedback_match(const TokenSeq& hyp, const TokenSeq& ref, bool clipped) {
  require_non_empty(hyp, ref, "feedback_match");
  Weights w(hyp.size(), 0.0);
  if (!clipped) {
    const std::set<text::TokenId> present(ref.begin(), ref.end());
    for (std::size_t i = 0; i < hyp.size(); ++i) w[i] = present.count(hyp[i]) ? 1.0 : 0.0;
    return w;
  }
  std::map<text::TokenId, int> budget;
  for (auto t : ref) ++budget[t];
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    auto it = budget.find(hyp[i]);
    if (it != budget.end() && it->second > 0) {
      --it->second;
      w[i] = 1.0;
    }
  }
  return w;
}

Weights feedback_lcs(const TokenSeq& hyp, const TokenSeq& ref) {
  require_non_empty(hyp, ref, "feedback_lcs");
  Weights w(hyp.size(), 0.0);
  const auto run = metrics::longest_common_substring(hyp, ref);
  for (std::size_t i = 0; i < run.length; ++i) w[run.start_a + i] = 1.0;
  return w;
}

Weights feedback_sent_sbleu(const TokenSeq& hyp, const TokenSeq& ref) {
  require_non_empty(hyp, ref, "feedback_sent_sbleu");
  return Weights(hyp.size(), metrics::sentence_bleu(hyp, ref));
}

Weights feedback_sent_binary(const TokenSeq& hyp, const TokenSeq& ref, double threshold) {
  require_non_empty(hyp, ref, "feedback_sent_binary");
  const Weights m = feedback_match(hyp, ref);
  double marked = 0;
  for (double x : m) marked += x;
  // Compare counts rather than fractions so that exactly 1/3 is not "more".
  const double needed = threshold * static_cast<double>(hyp.size());
  const bool pass = marked > needed && std::abs(marked - needed) > 1e-9;
  return Weights(hyp.size(), pass ? 1.0 : 0.0);
}

Weights all_ones(const TokenSeq& hyp) { return Weights(hyp.size(), 1.0); }

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kAllOnes: return "all-ones";
    case Scheme::kSentSbleu: return "sent-sbleu";
    case Scheme::kSentBinary: return "sent-binary";
    case Scheme::kMatch: return "match";
    case Scheme::kLcs: return "lcs";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "all-ones" || name == "none" || name == "self-training") return Scheme::kAllOnes;
  if (name == "sent-sbleu") return Scheme::kSentSbleu;
  if (name == "sent-binary") return Scheme::kSentBinary;
  if (name == "match" || name == "chunk-match") return Scheme::kMatch;
  if (name == "lcs" || name == "chunk-lcs") return Scheme::kLcs;
  throw Error("unknown feedback scheme: " + name);
}

FeedbackRecord make_feedback(Scheme scheme, const TokenSeq& source, const TokenSeq& hyp,
                             const TokenSeq& ref) {
  FeedbackRecord r;
  r.source = source;
  r.hypothesis = hyp;
  r.scheme = scheme_name(scheme);
  switch (scheme) {
    case Scheme::kAllOnes: r.weights = all_ones(hyp); break;
    case Scheme::kSentSbleu: r.weights = feedback_sent_sbleu(hyp, ref); break;
    case Scheme::kSentBinary: r.weights = feedback_sent_binary(hyp, ref); break;
    case Scheme::kMatch: r.weights = feedback_match(hyp, ref); break;
    case Scheme::kLcs: r.weights = feedback_lcs(hyp, ref); break;
  }
  return r;
}

std::string NoiseSpec::tag() const {
  std::string t = "under=" + std::to_string(under_selection_ratio) +
                  ",incorrect=" + std::to_string(incorrect_selection_ratio);
  if (replace_unselected_with_random) t += ",random-unselected";
  return t + ",seed=" + std::to_string(seed);
}

void validate(const NoiseSpec& spec) {
  for (double r : {spec.under_selection_ratio, spec.incorrect_selection_ratio}) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("noise ratio out of [0,1]: " + std::to_string(r));
  }
}

std::size_t noisy_count(double ratio, std::size_t count) {
  // Default floating-point environment rounds half to even.
  const double x = std::nearbyint(ratio * static_cast<double>(count));
  return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(count)));
}

FeedbackRecord inject_under_selection(const FeedbackRecord& r, double ratio, std::uint64_t seed) {
  require_binary(r, "inject_under_selection");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error("inject_under_selection: ratio out of [0,1]");
  FeedbackRecord out = r;
  const auto selected = positions_with(r.weights, 1.0);
  const std::size_t flips = noisy_count(ratio, selected.size());
  Rng rng(seed);
  for (std::size_t idx : rng.sample_without_replacement(selected.size(), flips)) {
    out.weights[selected[idx]] = 0.0;
  }
  return out;
}

namespace {

// Moves round(ratio * k) of the k marks of `r` onto positions drawn from
// `candidates`, which must all be unselected.
FeedbackRecord move_marks(const FeedbackRecord& r, const std::vector<std::size_t>& candidates, double ratio,
                          std::uint64_t seed, double* achieved_ratio) {
  FeedbackRecord out = r;
  const auto selected = positions_with(r.weights, 1.0);
  const std::size_t wanted = noisy_count(ratio, selected.size());
  const std::size_t moves = std::min(wanted, candidates.size());
  Rng rng(seed);
  for (std::size_t idx : rng.sample_without_replacement(selected.size(), moves)) {
    out.weights[selected[idx]] = 0.0;
  }
  for (std::size_t idx : rng.sample_without_replacement(candidates.size(), moves)) {
    out.weights[candidates[idx]] = 1.0;
  }
  if (achieved_ratio != nullptr) {
    *achieved_ratio = selected.empty() ? 0.0 : static_cast<double>(moves) / static_cast<double>(selected.size());
  }
  return out;
}

}  // namespace

FeedbackRecord inject_incorrect_selection(const FeedbackRecord& r, double ratio, std::uint64_t seed,
                                          double* achieved_ratio) {
  require_binary(r, "inject_incorrect_selection");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error("inject_incorrect_selection: ratio out of [0,1]");
  return move_marks(r, positions_with(r.weights, 0.0), ratio, seed, achieved_ratio);
}

FeedbackRecord inject_combined(const FeedbackRecord& r, double under_ratio, double incorrect_ratio,
                               std::uint64_t seed) {
  const FeedbackRecord reduced = inject_under_selection(r, under_ratio, seed);
  if (!(incorrect_ratio >= 0.0 && incorrect_ratio <= 1.0)) throw Error("inject_combined: ratio out of [0,1]");
  // Words dropped by under-selection are still correct, so only originally
  // unselected positions can become incorrect marks.
  return move_marks(reduced, positions_with(r.weights, 0.0), incorrect_ratio, splitmix64(seed), nullptr);
}

FeedbackRecord replace_unselected_random(const FeedbackRecord& r, std::size_t vocab_size,
                                         std::uint64_t seed) {
  require_binary(r, "replace_unselected_random");
  if (vocab_size <= static_cast<std::size_t>(text::kNumReserved)) {
    throw Error("replace_unselected_random: vocabulary has no regular tokens");
  }
  FeedbackRecord out = r;
  Rng rng(seed);
  const std::size_t regular = vocab_size - static_cast<std::size_t>(text::kNumReserved);
  for (std::size_t i = 0; i < out.hypothesis.size(); ++i) {
    if (out.weights[i] == 0.0) {
      out.hypothesis[i] = static_cast<text::TokenId>(text::kNumReserved + static_cast<text::TokenId>(rng.index(regular)));
    }
  }
  return out;
}

FeedbackRecord apply_noise(const FeedbackRecord& r, const NoiseSpec& spec, std::size_t vocab_size,
                           std::uint64_t record_index) {
  validate(spec);
  if (spec.is_clean()) return r;
  const std::uint64_t seed = splitmix64(spec.seed ^ splitmix64(record_index));
  FeedbackRecord out = r;
  if (spec.under_selection_ratio > 0.0 || spec.incorrect_selection_ratio > 0.0) {
    out = inject_combined(out, spec.under_selection_ratio, spec.incorrect_selection_ratio, seed);
  }
  if (spec.replace_unselected_with_random) {
    out = replace_unselected_random(out, vocab_size, splitmix64(seed + 1));
  }
  out.scheme = r.scheme + "+noisy:" + spec.tag();
  out.seed = seed;
  return out;
}

SelectionStats selection_stats(const std::vector<FeedbackRecord>& records) {
  if (records.empty()) throw Error("selection_stats: no records");
  SelectionStats s;
  for (const auto& r : records) {
    check_record(r);
    if (r.weights.empty()) throw Error("selection_stats: record with no weights");
    double marked = 0;
    for (double w : r.weights) marked += w;
    s.records += 1;
    s.tokens += r.weights.size();
    s.marked += marked;
    const double frac = marked / static_cast<double>(r.weights.size());
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, frac) * 10.0));
    s.histogram[bin] += 1;
  }
  s.marked_fraction = s.marked / static_cast<double>(s.tokens);
  return s;
}

std::string to_json_line(const FeedbackRecord& r, const text::Vocabulary& src_vocab,
                         const text::Vocabulary& tgt_vocab) {
  check_record(r);
  nlohmann::ordered_json j;
  j["src"] = src_vocab.decode(r.source);
  j["hyp"] = tgt_vocab.decode(r.hypothesis);
  j["weights"] = r.weights;
  j["scheme"] = r.scheme;
  if (r.seed) j["seed"] = *r.seed;
  return j.dump();
}

FeedbackRecord from_json_line(const std::string& line, const text::Vocabulary& src_vocab,
                              const text::Vocabulary& tgt_vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("feedback JSONL: ") + e.what());
  }
  for (const char* key : {"src", "hyp", "weights", "scheme"}) {
    if (!j.contains(key)) throw Error(std::string("feedback JSONL: missing field ") + key);
  }
  FeedbackRecord r;
  r.source = src_vocab.encode_line(j.at("src").get<std::string>());
  r.hypothesis = tgt_vocab.encode_line(j.at("hyp").get<std::string>());
  r.weights = j.at("weights").get<Weights>();
  r.scheme = j.at("scheme").get<std::string>();
  if (j.contains("seed") && !j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  check_record(r);
  return r;
}

void write_jsonl(const std::string& path, const std::vector<FeedbackRecord>& records,
                 const text::Vocabulary& src_vocab, const text::Vocabulary& tgt_vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& r : records) out << to_json_line(r, src_vocab, tgt_vocab) << '\n';
}

std::vector<FeedbackRecord> read_jsonl(const std::string& path, const text::Vocabulary& src_vocab,
                                       const text::Vocabulary& tgt_vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<FeedbackRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(from_json_line(line, src_vocab, tgt_vocab));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace chunkfb::feedback
