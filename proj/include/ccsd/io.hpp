#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ccsd/cluster.hpp"
#include "ccsd/errors.hpp"
#include "ccsd/fraud.hpp"

namespace ccsd::io {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string strip_quotes(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                        (t.front() == '\'' && t.back() == '\'')))
    return t.substr(1, t.size() - 2);
  return t;
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Splits one line on the delimiter; '"' and '\'' quoting tolerated.
inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) quote = 0;
      cur.push_back(c);
    } else if (c == '"' || c == '\'') {
      quote = c;
      cur.push_back(c);
    } else if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

/// Whitespace split used when neither tabs nor commas are present.
inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& cell, const std::string& file,
                           std::size_t line_no) {
  const std::string t = trim(cell);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": cannot parse numeric cell '" + t + "'");
  if (!std::isfinite(v))
    throw DataError(file + ":" + std::to_string(line_no) +
                    ": non-finite value '" + t + "'");
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

/// Loads one archive-style split file: one series per row, first column an
/// integer class label, remaining columns the values. Tab, comma and
/// whitespace delimiters are sniffed from the first data row.
inline std::vector<cluster::LabeledSeries> load_series_file(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::vector<cluster::LabeledSeries> out;
  std::size_t expected_cols = 0;
  char delim = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    if (out.empty() && delim == 0)
      delim = lines[i].find('\t') != std::string::npos   ? '\t'
              : lines[i].find(',') != std::string::npos ? ','
                                                         : ' ';
    const auto cells = delim == ' ' ? detail::split_ws(lines[i])
                                    : detail::split_line(lines[i], delim);
    if (expected_cols == 0) {
      expected_cols = cells.size();
      if (expected_cols < 3)
        throw DataError(path + ":" + std::to_string(i + 1) +
                        ": need a label and at least two values per row");
    } else if (cells.size() != expected_cols) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": ragged row (" +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(expected_cols) + ")");
    }
    cluster::LabeledSeries s;
    const double raw_label = detail::parse_double(cells[0], path, i + 1);
    s.label = static_cast<int>(std::llround(raw_label));
    s.id = path + "#" + std::to_string(out.size());
    s.values.resize(static_cast<Eigen::Index>(cells.size() - 1));
    for (std::size_t c = 1; c < cells.size(); ++c)
      s.values(static_cast<Eigen::Index>(c - 1)) =
          detail::parse_double(cells[c], path, i + 1);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError(path + ": no series rows found");
  return out;
}

/// Loads the official train/test pair of split files.
inline std::pair<std::vector<cluster::LabeledSeries>, std::vector<cluster::LabeledSeries>>
load_ucr(const std::string& train_path, const std::string& test_path) {
  return {load_series_file(train_path), load_series_file(test_path)};
}

/// Loads transaction rows from a CSV with at least the columns step,
/// customer, merchant, category, amount, fraud (case-insensitive header
/// match; quotes stripped; extra columns ignored).
inline std::vector<fraud::TransactionRecord> load_banksim(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = detail::split_line(lines[0], ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c)
    col[detail::lower(detail::strip_quotes(header[c]))] = c;
  for (const char* required : {"step", "customer", "merchant", "category",
                               "amount", "fraud"})
    if (!col.count(required))
      throw ConfigError(path + ": missing required column '" +
                        std::string(required) + "'");
  const std::size_t c_step = col["step"], c_customer = col["customer"],
                    c_merchant = col["merchant"], c_category = col["category"],
                    c_amount = col["amount"], c_fraud = col["fraud"];
  std::vector<fraud::TransactionRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto cells = detail::split_line(lines[i], ',');
    if (cells.size() < header.size())
      throw DataError(path + ":" + std::to_string(i + 1) + ": truncated row");
    fraud::TransactionRecord r;
    r.step = static_cast<long>(
        detail::parse_double(detail::strip_quotes(cells[c_step]), path, i + 1));
    r.customer = detail::strip_quotes(cells[c_customer]);
    r.merchant = detail::strip_quotes(cells[c_merchant]);
    r.category = detail::strip_quotes(cells[c_category]);
    r.amount = detail::parse_double(detail::strip_quotes(cells[c_amount]), path, i + 1);
    r.fraud = static_cast<int>(
        detail::parse_double(detail::strip_quotes(cells[c_fraud]), path, i + 1));
    if (r.step < 0)
      throw DataError(path + ":" + std::to_string(i + 1) + ": negative step");
    if (r.fraud != 0 && r.fraud != 1)
      throw DataError(path + ":" + std::to_string(i + 1) + ": fraud must be 0/1");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError(path + ": no transaction rows found");
  return out;
}

/// Writes content atomically: temp file in the target directory, then rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write temporary file: " + tmp.string());
    out << content;
    if (!out.good()) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace ccsd::io
