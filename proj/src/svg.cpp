#include "modedec/svg.hpp"

#include <algorithm>
#include <fstream>

#include "modedec/errors.hpp"
#include "modedec/io.hpp"

namespace modedec {

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series, int width,
                         int height) {
  if (series.empty()) throw invalid_input("write_line_plot_svg: no series");
  double xmin = series[0].x.minCoeff(), xmax = series[0].x.maxCoeff();
  double ymin = series[0].y.minCoeff(), ymax = series[0].y.maxCoeff();
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.size() < 2)
      throw invalid_input("write_line_plot_svg: bad series " + s.label);
    xmin = std::min(xmin, s.x.minCoeff());
    xmax = std::max(xmax, s.x.maxCoeff());
    ymin = std::min(ymin, s.y.minCoeff());
    ymax = std::max(ymax, s.y.maxCoeff());
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double mx = 50.0, my = 30.0;
  const double pw = width - 2 * mx, ph = height - 2 * my;
  auto px = [&](double x) { return mx + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return my + (ymax - y) / (ymax - ymin) * ph; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
  out << "<rect x=\"" << mx << "\" y=\"" << my << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#888\"/>\n";
  // axis extents
  out << "<text x=\"" << mx << "\" y=\"" << height - 8
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(xmin)
      << "</text>\n";
  out << "<text x=\"" << mx + pw << "\" y=\"" << height - 8
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_double(xmax) << "</text>\n";
  out << "<text x=\"4\" y=\"" << py(ymin)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(ymin)
      << "</text>\n";
  out << "<text x=\"4\" y=\"" << py(ymax) + 10
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_double(ymax)
      << "</text>\n";

  double ly = my + 14.0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1\" points=\"";
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << mx + pw - 4 << "\" y=\"" << ly
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
        << "fill=\"" << s.color << "\">" << s.label << "</text>\n";
    ly += 14.0;
  }
  out << "</svg>\n";
  if (!out) throw data_error("write failed: " + path);
}

}  // namespace modedec
