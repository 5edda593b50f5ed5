#pragma once

#include <string>
#include <vector>

#include "chunkfb/exp/experiment.hpp"

namespace chunkfb::exp {

/// Machine-readable rows; values keep full precision, "-" marks NaN.
std::string render_tsv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_tsv(const std::string& tsv);

/// Aligned text table, BLEU/TER/accuracy with one decimal.
std::string render_table(const std::vector<ResultRow>& rows, const std::vector<std::string>& labels = {});

}  // namespace chunkfb::exp
