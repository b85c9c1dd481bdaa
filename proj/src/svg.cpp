#include "tdm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tdm::svg {

namespace {

constexpr double kWidth = 480, kHeight = 360;
constexpr double kLeft = 60, kRight = 20, kTop = 36, kBottom = 44;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

struct Frame {
  Bounds b;
  double px(double x) const { return kLeft + (x - b.xmin) / (b.xmax - b.xmin) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y - b.ymin) / (b.ymax - b.ymin) * (kHeight - kTop - kBottom);
  }
};

void open_doc(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl,
          bool log_y) {
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
     << num(kWidth - kLeft - kRight) << "\" height=\"" << num(kHeight - kTop - kBottom)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.b.xmin + (f.b.xmax - f.b.xmin) * i / 4.0;
    const double yv = f.b.ymin + (f.b.ymax - f.b.ymin) * i / 4.0;
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(kHeight - kBottom + 14)
       << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 4) << "\" y=\"" << num(f.py(yv) + 4)
       << "\" text-anchor=\"end\">" << tick(log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  if (!xl.empty()) {
    os << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 8)
       << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  }
  if (!yl.empty()) {
    os << "<text x=\"14\" y=\"" << num(kHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << num(kHeight / 2) << ")\">" << escape(yl) << "</text>\n";
  }
}

void legend(std::ostringstream& os, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 12 + 14 * static_cast<double>(i);
    os << "<rect x=\"" << num(kWidth - kRight - 110) << "\" y=\"" << num(y - 8)
       << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[i % 6] << "\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight - 96) << "\" y=\"" << num(y) << "\">"
       << escape(labels[i]) << "</text>\n";
  }
}

Bounds padded(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double dy = 0.05 * (ymax - ymin);
  return {xmin, xmax, ymin - dy, ymax + dy};
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series, bool log_y) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  std::size_t points = 0;
  auto ty = [log_y](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line_chart: x and y sizes differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
      ++points;
    }
  }
  if (points == 0) throw std::invalid_argument("line_chart: nothing to plot");
  const Frame f{padded(xmin, xmax, ymin, ymax)};
  std::ostringstream os;
  open_doc(os, title);
  axes(os, f, x_label, y_label, log_y);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    labels.push_back(s.label);
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 6] << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0)) continue;
      os << (first ? "" : " ") << num(f.px(s.x[i])) << ',' << num(f.py(ty(s.y[i])));
      first = false;
    }
    os << "\"/>\n";
  }
  legend(os, labels);
  os << "</svg>\n";
  return os.str();
}

std::string scatter_chart(const std::string& title, const std::vector<PointLayer>& layers,
                          const Bounds& bounds) {
  if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin)) {
    throw std::invalid_argument("scatter_chart: empty bounds");
  }
  const Frame f{bounds};
  std::ostringstream os;
  open_doc(os, title);
  axes(os, f, "x1", "x2", false);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& pts = layers[k].points;
    if (pts.cols() < 2) throw std::invalid_argument("scatter_chart: need two columns");
    labels.push_back(layers[k].label);
    os << "<g fill=\"" << kPalette[k % 6] << "\" fill-opacity=\"0.35\">\n";
    for (Eigen::Index r = 0; r < pts.rows(); ++r) {
      const double x = pts(r, 0), y = pts(r, 1);
      if (x < bounds.xmin || x > bounds.xmax || y < bounds.ymin || y > bounds.ymax) continue;
      os << "<circle cx=\"" << num(f.px(x)) << "\" cy=\"" << num(f.py(y)) << "\" r=\"1.3\"/>\n";
    }
    os << "</g>\n";
  }
  legend(os, labels);
  os << "</svg>\n";
  return os.str();
}

}  // namespace tdm::svg
