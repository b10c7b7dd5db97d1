#ifndef MODEDEC_IO_HPP
#define MODEDEC_IO_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "modedec/signal.hpp"

namespace modedec {

/// Numeric CSV with a header row. Cells are written with round-trip (17
/// significant digit) precision, LF line endings.
struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd data;  // rows x columns
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

std::string format_double(double v);

/// Header `t,value`. A non-numeric first column (e.g. dates) is replaced by
/// the sample index.
Signal read_signal_csv(const std::string& path);
void write_signal_csv(const std::string& path, const Signal& s);

/// Header `t,imf1,...,imfM,residue`.
void write_components_csv(const std::string& path, const TimeGrid& grid,
                          const ComponentSet& cs);
/// Reads component columns; a trailing `residue` column is folded into the
/// ComponentSet residue, otherwise the residue is zero.
ComponentSet read_components_csv(const std::string& path);

}  // namespace modedec

#endif
