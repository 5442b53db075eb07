#pragma once

#include <string>
#include <vector>

namespace pgov {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// One <polyline> per series with one vertex per (x, y) sample.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<PlotSeries>& series);

// Grouped bars: values[g][s] is series s within group g; errors (same
// shape, optional) draw +-whiskers.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<std::string>& series_names, const std::vector<std::vector<double>>& values,
                          const std::vector<std::vector<double>>& errors = {});

std::string xml_escape(const std::string& text);

}  // namespace pgov
