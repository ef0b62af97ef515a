#pragma once

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "alsrec/dataset.hpp"
#include "alsrec/error.hpp"

namespace alsrec {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

// Reads the interaction CSV format: UTF-8, header
// `investor_id,company_id[,count]`, one record per line. The count column, if
// present, must be a non-negative integer; it is validated and discarded
// (repeat interactions collapse to one). IDs may not contain commas.
inline InteractionDataset read_interactions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header");
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  if (header.size() < 2 || header.size() > 3 || header[0] != "investor_id" ||
      header[1] != "company_id" || (header.size() == 3 && header[2] != "count"))
    throw ParseError("line 1: expected header investor_id,company_id[,count]");
  const bool has_count = header.size() == 3;

  std::vector<InteractionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty id token");
    if (has_count) {
      const std::string& cnt = fields[2];
      if (cnt.empty() || cnt.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("line " + std::to_string(line_no) + ": count is not a non-negative integer");
    }
    records.push_back({fields[0], fields[1]});
  }
  if (records.empty()) throw ParseError("no interaction records in input");
  return ingest(records);
}

inline InteractionDataset read_interactions_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  try {
    return read_interactions_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// Writes pairs in first-occurrence order so that re-ingesting the output
// reproduces the dataset exactly, including index assignment. Entities with
// no remaining pairs (possible in holdout training sets) have no row to
// carry them and are dropped by a round trip.
inline void write_interactions_csv(std::ostream& out, const InteractionDataset& d) {
  out << "investor_id,company_id\n";
  for (const Pair& p : d.pairs_in_order())
    out << d.investor_id(p.investor) << ',' << d.company_id(p.company) << '\n';
}

inline void write_interactions_csv_file(const std::string& path, const InteractionDataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_interactions_csv(out, d);
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace alsrec
