#include <cctype>
#include <cstdio>

#include "chunkfb/metrics/bleu.hpp"
#include "chunkfb/metrics/evaluate.hpp"
#include "chunkfb/metrics/ter.hpp"
#include "chunkfb/textcorpus/vocabulary.hpp"

namespace chunkfb::metrics {

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

std::vector<std::string> lowered(const std::vector<std::string>& tokens, bool lowercase) {
  if (!lowercase) return tokens;
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(to_lower(t));
  return out;
}

}  // namespace

BleuReport report_from_stats(const BleuStats& stats, int max_n) {
  BleuReport r;
  r.max_n = max_n;
  r.hyp_length = stats.hyp_length;
  r.ref_length = stats.ref_length;
  r.brevity_penalty = brevity_penalty(stats.hyp_length, stats.ref_length);
  for (int n = 0; n < max_n; ++n) {
    r.precisions[n] = stats.totals[n] > 0 ? stats.matches[n] / stats.totals[n] : 0.0;
  }
  r.bleu_percent = 100.0 * bleu_from_stats(stats, max_n);
  return r;
}

BleuReport corpus_bleu(const std::vector<std::vector<std::string>>& hyps,
                       const std::vector<std::vector<std::string>>& refs, int max_n, bool lowercase) {
  if (hyps.size() != refs.size()) {
    throw Error("corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                std::to_string(refs.size()) + " references");
  }
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = lowered(hyps[i], lowercase);
    const auto r = lowered(refs[i], lowercase);
    total += bleu_stats<std::string>(h, r, max_n);
  }
  return report_from_stats(total, max_n);
}

double ter(const std::vector<std::string>& hyp, const std::vector<std::string>& ref, bool lowercase) {
  return ter_edits<std::string>(lowered(hyp, lowercase), lowered(ref, lowercase)).percent();
}

double corpus_ter(const std::vector<std::vector<std::string>>& hyps,
                  const std::vector<std::vector<std::string>>& refs, bool lowercase) {
  if (hyps.size() != refs.size()) {
    throw Error("corpus_ter: " + std::to_string(hyps.size()) + " hypotheses vs " +
                std::to_string(refs.size()) + " references");
  }
  double edits = 0, length = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto r = ter_edits<std::string>(lowered(hyps[i], lowercase), lowered(refs[i], lowercase));
    edits += static_cast<double>(r.edits);
    length += static_cast<double>(r.ref_length);
  }
  return length > 0 ? 100.0 * edits / length : 0.0;
}

EvalReport evaluate(const std::vector<std::string>& hyp_lines, const std::vector<std::string>& ref_lines) {
  if (hyp_lines.size() != ref_lines.size()) {
    throw Error("evaluate: " + std::to_string(hyp_lines.size()) + " hypotheses vs " +
                std::to_string(ref_lines.size()) + " references");
  }
  std::vector<std::vector<std::string>> hyps, refs;
  hyps.reserve(hyp_lines.size());
  refs.reserve(ref_lines.size());
  for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
    hyps.push_back(text::split_tokens(hyp_lines[i]));
    refs.push_back(text::split_tokens(ref_lines[i]));
  }
  EvalReport r;
  r.sentences = hyp_lines.size();
  r.bleu = corpus_bleu(hyps, refs);
  r.bleu_percent = r.bleu.bleu_percent;
  r.ter_percent = corpus_ter(hyps, refs);
  return r;
}

std::string tsv_header() { return "bleu\tter\tbp\tp1\tp2\tp3\tp4"; }

std::string to_tsv_row(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f", r.bleu_percent,
                r.ter_percent, r.bleu.brevity_penalty, r.bleu.precisions[0], r.bleu.precisions[1],
                r.bleu.precisions[2], r.bleu.precisions[3]);
  return buf;
}

std::string to_summary(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "sentences %zu\nBLEU %.1f (BP %.3f, ratio %.3f, hyp_len %.0f, ref_len %.0f)\n"
                "precisions %.1f/%.1f/%.1f/%.1f\nTER %.1f\n",
                r.sentences, r.bleu_percent, r.bleu.brevity_penalty,
                r.bleu.ref_length > 0 ? r.bleu.hyp_length / r.bleu.ref_length : 0.0, r.bleu.hyp_length,
                r.bleu.ref_length, 100 * r.bleu.precisions[0], 100 * r.bleu.precisions[1],
                100 * r.bleu.precisions[2], 100 * r.bleu.precisions[3], r.ter_percent);
  return buf;
}

}  // namespace chunkfb::metrics
