#include "chunkfb/exp/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "chunkfb/error.hpp"

namespace chunkfb::exp {

namespace {

const char* kHeader = "system\tbleu\tter\tambiguity_acc\tmarked_fraction\tseed\tcheckpoint";

std::string cell(double v) { return std::isnan(v) ? "-" : format_double(v); }

double parse_cell(const std::string& s) {
  if (s == "-") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw Error("report: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string fixed1(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string render_tsv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows) {
    if (r.system.find_first_of("\t\n") != std::string::npos) throw Error("report: system name contains a tab or newline");
    out += r.system + "\t" + cell(r.bleu) + "\t" + cell(r.ter) + "\t" + cell(r.ambiguity_accuracy) + "\t" +
           cell(r.marked_fraction) + "\t" + std::to_string(r.seed) + "\t" + r.checkpoint + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_tsv(const std::string& tsv) {
  std::istringstream in(tsv);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error("report: missing or unexpected TSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 7) throw Error("report: expected 7 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.system = f[0];
    r.bleu = parse_cell(f[1]);
    r.ter = parse_cell(f[2]);
    r.ambiguity_accuracy = parse_cell(f[3]);
    r.marked_fraction = parse_cell(f[4]);
    r.seed = std::stoull(f[5]);
    r.checkpoint = f[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_table(const std::vector<ResultRow>& rows, const std::vector<std::string>& labels) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"system", "BLEU", "TER", "amb.acc%", "marked%"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    cells.push_back({i < labels.size() ? labels[i] : r.system, fixed1(r.bleu), fixed1(r.ter),
                     fixed1(r.ambiguity_accuracy), fixed1(100 * r.marked_fraction)});
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      const auto& s = cells[i][c];
      const std::string pad(width[c] - s.size(), ' ');
      out += c == 0 ? s + pad : "  " + pad + s;
    }
    out += "\n";
    if (i == 0) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}

}  // namespace chunkfb::exp
