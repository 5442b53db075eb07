#include "pgov/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pgov/common.hpp"

namespace pgov {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

const char* color_of(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

std::string header(const std::string& title) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                    num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">" + xml_escape(title) + "</text>\n";
  return out;
}

std::string axes(double y_lo, double y_hi, const std::string& x_label, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string out;
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
  out += "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_lo + (y_hi - y_lo) * i / 4.0;
    const double y = y0 - (y0 - y1) * i / 4.0;
    out += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick(v) + "</text>\n";
  }
  out += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + num((y0 + y1) / 2) + "\" transform=\"rotate(-90 16 " + num((y0 + y1) / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(y_label) +
         "</text>\n";
  return out;
}

std::string legend(const std::vector<std::string>& names) {
  std::string out;
  const double x = kWidth - kRight + 14;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" + color_of(i) +
           "\"/>\n";
    out += "<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 1) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
           xml_escape(names[i]) + "</text>\n";
  }
  return out;
}

void pad_range(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error(Errc::kShapeMismatch, "series '" + s.name + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  pad_range(x_lo, x_hi);
  pad_range(y_lo, y_hi);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string out = header(title) + axes(y_lo, y_hi, x_label, y_label);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    names.push_back(s.name);
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double px = x0 + (s.x[i] - x_lo) / (x_hi - x_lo) * (x1 - x0);
      const double py = y0 - (s.y[i] - y_lo) / (y_hi - y_lo) * (y0 - y1);
      if (!pts.empty()) pts += ' ';
      pts += num(px) + "," + num(py);
    }
    out += "<polyline data-series=\"" + xml_escape(s.name) + "\" fill=\"none\" stroke=\"" + color_of(k) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  }
  out += legend(names);
  out += "</svg>\n";
  return out;
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<std::string>& series_names, const std::vector<std::vector<double>>& values,
                          const std::vector<std::vector<double>>& errors) {
  if (values.size() != groups.size()) throw Error(Errc::kShapeMismatch, "one value row per group expected");
  double y_hi = 0.0;
  for (std::size_t g = 0; g < values.size(); ++g) {
    if (values[g].size() != series_names.size()) throw Error(Errc::kShapeMismatch, "one value per series expected");
    for (std::size_t s = 0; s < values[g].size(); ++s) {
      const double e = errors.empty() ? 0.0 : errors[g][s];
      y_hi = std::max(y_hi, values[g][s] + e);
    }
  }
  if (y_hi <= 0.0) y_hi = 1.0;
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string out = header(title) + axes(0.0, y_hi, "", "");
  const double group_w = (x1 - x0) / std::max<std::size_t>(1, groups.size());
  const double bar_w = 0.8 * group_w / std::max<std::size_t>(1, series_names.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = x0 + group_w * static_cast<double>(g) + 0.1 * group_w;
    for (std::size_t s = 0; s < series_names.size(); ++s) {
      const double v = values[g][s];
      const double h = v / y_hi * (y0 - y1);
      const double bx = gx + bar_w * static_cast<double>(s);
      out += "<rect x=\"" + num(bx) + "\" y=\"" + num(y0 - h) + "\" width=\"" + num(bar_w * 0.9) + "\" height=\"" +
             num(h) + "\" fill=\"" + color_of(s) + "\"><title>" + xml_escape(groups[g]) + " / " +
             xml_escape(series_names[s]) + ": " + tick(v) + "</title></rect>\n";
      if (!errors.empty() && errors[g][s] > 0.0) {
        const double cx = bx + bar_w * 0.45;
        const double ylo = y0 - (v - errors[g][s]) / y_hi * (y0 - y1);
        const double yhi = y0 - (v + errors[g][s]) / y_hi * (y0 - y1);
        out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(ylo) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(yhi) +
               "\" stroke=\"black\"/>\n";
      }
    }
    out += "<text x=\"" + num(gx + 0.4 * group_w) + "\" y=\"" + num(y0 + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + xml_escape(groups[g]) +
           "</text>\n";
  }
  out += legend(series_names);
  out += "</svg>\n";
  return out;
}

}  // namespace pgov
