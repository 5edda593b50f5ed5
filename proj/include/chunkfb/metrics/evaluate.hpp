#pragma once

#include <string>
#include <vector>

#include "chunkfb/metrics/bleu.hpp"

namespace chunkfb::metrics {

struct EvalReport {
  double bleu_percent = 0;
  double ter_percent = 0;
  std::size_t sentences = 0;
  BleuReport bleu;
};

/// Case-insensitive BLEU and TER of hypothesis lines against reference lines.
EvalReport evaluate(const std::vector<std::string>& hyp_lines, const std::vector<std::string>& ref_lines);

/// bleu, ter, bp, p1..p4 separated by tabs.
std::string tsv_header();
std::string to_tsv_row(const EvalReport& r);
std::string to_summary(const EvalReport& r);

}  // namespace chunkfb::metrics
