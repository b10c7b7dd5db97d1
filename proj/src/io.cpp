#include "modedec/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace modedec {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable t;
  t.columns = split_line(line);
  if (t.columns.empty()) throw data_error(path + ": empty header");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.columns.size())
      throw data_error(path + ": row " + std::to_string(lineno) +
                       " has wrong column count");
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (!parse_double(cells[j], row[j]))
        throw data_error(path + ": row " + std::to_string(lineno) +
                         ": cannot parse '" + cells[j] + "'");
    rows.push_back(std::move(row));
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw data_error("cannot write " + path);
  for (std::size_t j = 0; j < table.columns.size(); ++j)
    out << (j ? "," : "") << table.columns[j];
  out << '\n';
  for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.data.cols(); ++j)
      out << (j ? "," : "") << format_double(table.data(i, j));
    out << '\n';
  }
  if (!out) throw data_error("write failed: " + path);
}

Signal read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);
  if (header.size() != 2)
    throw data_error(path + ": expected two columns (t,value)");

  std::vector<double> ts, vs;
  bool t_numeric = true;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != 2)
      throw data_error(path + ": row " + std::to_string(lineno) +
                       " has wrong column count");
    double tv = 0.0, vv = 0.0;
    if (t_numeric && !parse_double(cells[0], tv)) t_numeric = false;
    if (!parse_double(cells[1], vv))
      throw data_error(path + ": row " + std::to_string(lineno) +
                       ": cannot parse value '" + cells[1] + "'");
    ts.push_back(tv);
    vs.push_back(vv);
  }
  const auto n = static_cast<int>(vs.size());
  if (n < 2) throw data_error(path + ": need at least 2 samples");
  Signal s;
  if (t_numeric) {
    s.grid = TimeGrid{ts.front(), ts.back(), n};
  } else {
    s.grid = TimeGrid{0.0, static_cast<double>(n - 1), n};
  }
  s.values = Eigen::Map<Eigen::VectorXd>(vs.data(), n);
  s.validate();
  return s;
}

void write_signal_csv(const std::string& path, const Signal& s) {
  s.validate();
  CsvTable t;
  t.columns = {"t", "value"};
  t.data.resize(s.grid.n, 2);
  t.data.col(0) = s.grid.times();
  t.data.col(1) = s.values;
  write_csv(path, t);
}

void write_components_csv(const std::string& path, const TimeGrid& grid,
                          const ComponentSet& cs) {
  if (cs.n() != grid.n) throw invalid_input("write_components_csv: length mismatch");
  CsvTable t;
  t.columns = {"t"};
  for (int m = 0; m < cs.num_components(); ++m)
    t.columns.push_back("imf" + std::to_string(m + 1));
  t.columns.push_back("residue");
  t.data.resize(grid.n, 2 + cs.num_components());
  t.data.col(0) = grid.times();
  for (int m = 0; m < cs.num_components(); ++m) t.data.col(1 + m) = cs.components[m];
  t.data.col(1 + cs.num_components()) = cs.residue;
  write_csv(path, t);
}

ComponentSet read_components_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.columns.size() < 2 || t.columns.front() != "t")
    throw data_error(path + ": expected header t,imf1,...");
  ComponentSet cs;
  const bool has_residue = t.columns.back() == "residue";
  const Eigen::Index ncomp =
      static_cast<Eigen::Index>(t.columns.size()) - 1 - (has_residue ? 1 : 0);
  if (ncomp < 1) throw data_error(path + ": no component columns");
  for (Eigen::Index m = 0; m < ncomp; ++m) cs.components.push_back(t.data.col(1 + m));
  cs.residue = has_residue ? Eigen::VectorXd(t.data.col(1 + ncomp))
                           : Eigen::VectorXd(Eigen::VectorXd::Zero(t.data.rows()));
  return cs;
}

}  // namespace modedec
