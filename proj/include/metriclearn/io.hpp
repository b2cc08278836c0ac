#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metriclearn/triplet.hpp"
#include "metriclearn/types.hpp"

namespace metriclearn {

inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("ragged CSV: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV: " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

// Triplet interchange format: header `i,j,k,y`, 1-based indices,
// y in {-1, 1}. Indices are converted at this boundary only.
inline void write_triplets_csv(const std::string& path,
                               const std::vector<LabeledTriplet>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "i,j,k,y\n";
  for (const auto& s : samples)
    out << s.t.i + 1 << ',' << s.t.j + 1 << ',' << s.t.k + 1 << ',' << s.y << '\n';
}

inline std::vector<LabeledTriplet> read_triplets_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty triplet file: " + path);
  if (line != "i,j,k,y" && line != "i,j,k,y\r")
    throw std::runtime_error("triplet file must start with header i,j,k,y: " + path);
  std::vector<LabeledTriplet> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<long long> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stoll(cell));
    if (vals.size() != 4)
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": expected 4 fields");
    if (vals[3] != -1 && vals[3] != 1)
      throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": y must be -1 or 1");
    // stored as given; only i != j != k is enforced (Triplet ctor)
    out.push_back({Triplet(vals[0] - 1, vals[1] - 1, vals[2] - 1), static_cast<int>(vals[3])});
  }
  return out;
}

}  // namespace metriclearn
