#ifndef MODEDEC_SVG_HPP
#define MODEDEC_SVG_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace modedec {

struct SvgSeries {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::string color = "#1f77b4";
};

/// Minimal overlay line plot with axes and a legend.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series,
                         int width = 900, int height = 320);

}  // namespace modedec

#endif
