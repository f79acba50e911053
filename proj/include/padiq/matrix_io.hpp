#pragma once

// Gram matrix file format: '#' starts a comment, the first data line holds
// n, the next n lines hold n space-separated integers each, and the matrix
// must be symmetric.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "padiq/matrix.hpp"

namespace padiq {

struct parse_error : error {
  using error::error;
};

inline IntQuadForm parse_form(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (!blank) lines.push_back(line);
  }
  if (lines.empty()) throw parse_error("matrix file: no data");
  int n = 0;
  {
    std::istringstream head(lines[0]);
    if (!(head >> n) || n <= 0) throw parse_error("matrix file: first line must hold the dimension");
    std::string extra;
    if (head >> extra) throw parse_error("matrix file: dimension line has trailing content");
  }
  if (static_cast<int>(lines.size()) != n + 1) {
    throw parse_error("matrix file: expected " + std::to_string(n) + " rows");
  }
  std::vector<std::vector<Int>> rows;
  for (int i = 0; i < n; ++i) {
    std::istringstream row(lines[static_cast<size_t>(i) + 1]);
    std::vector<Int> r;
    std::string tok;
    while (row >> tok) {
      try {
        r.push_back(Int(tok));
      } catch (const std::exception&) {
        throw parse_error("matrix file: bad integer '" + tok + "'");
      }
    }
    if (static_cast<int>(r.size()) != n) throw parse_error("matrix file: row with wrong entry count");
    rows.push_back(std::move(r));
  }
  try {
    return IntQuadForm::from_rows(rows);
  } catch (const precondition_error& e) {
    throw parse_error(std::string("matrix file: ") + e.what());
  }
}

inline IntQuadForm load_form(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("matrix file: cannot open " + path);
  return parse_form(in);
}

inline std::string format_matrix(const ModMatrix& m) {
  std::ostringstream out;
  out << m.rows() << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m.at(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace padiq
