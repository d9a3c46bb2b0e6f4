#include "rlreach/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace rlreach::svg {

std::string num(double v) {
  if (std::abs(v) < 0.005) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  std::vector<double> ticks;
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return ticks;
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  const double first = std::ceil(lo / step - 1e-9);
  for (double k = first; k * step <= hi + step * 1e-9; k += 1.0) {
    double v = k * step;
    if (std::abs(v) < step * 1e-9) v = 0.0;
    ticks.push_back(v);
  }
  return ticks;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string style_attrs(const Style& s) {
  std::string out;
  if (!s.css_class.empty()) out += " class=\"" + escape(s.css_class) + "\"";
  out += " fill=\"" + s.fill + "\" stroke=\"" + s.stroke + "\" stroke-width=\"" + num(s.stroke_width) + "\"";
  if (!s.dash.empty()) out += " stroke-dasharray=\"" + s.dash + "\"";
  return out;
}

}  // namespace

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::rect(double x, double y, double w, double h, const Style& style) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
           num(h) + "\"" + style_attrs(style) + "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const Style& style) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\"" + style_attrs(style) + "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& pts, const Style& style,
                        std::string_view data_label) {
  std::string points;
  for (const auto& [x, y] : pts) {
    if (!points.empty()) points += ' ';
    points += num(x) + "," + num(y);
  }
  body_ += "<polyline";
  if (!data_label.empty()) body_ += " data-series=\"" + escape(data_label) + "\"";
  body_ += " points=\"" + points + "\"" + style_attrs(style) + "/>\n";
}

void Document::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                    double rotate) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" text-anchor=\"" + std::string(anchor) + "\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
  body_ += ">" + escape(content) + "</text>\n";
}

void Document::open_group(std::string_view id) { body_ += "<g id=\"" + escape(id) + "\">\n"; }

void Document::close_group() { body_ += "</g>\n"; }

std::string Document::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
         num(height_) + "\" font-family=\"sans-serif\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
         "\" fill=\"#ffffff\"/>\n" + body_ + "</svg>\n";
}

double Frame::px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * width; }

double Frame::py(double y) const { return top + height - (y - y_lo) / (y_hi - y_lo) * height; }

std::pair<double, double> padded_range(double lo, double hi, double pad_fraction) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) return {0.0, 1.0};
  if (hi == lo) {
    const double half = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
    return {lo - half, hi + half};
  }
  const double pad = (hi - lo) * pad_fraction;
  return {lo - pad, hi + pad};
}

void draw_axes(Document& doc, const Frame& f, std::string_view title, std::string_view x_label,
               std::string_view y_label, bool x_ticks) {
  const auto axis = Style::stroke_only("#000000", 1.0);
  const auto grid = Style::stroke_only("#dddddd", 0.5);
  const double bottom = f.top + f.height;
  const double right = f.left + f.width;
  for (double v : nice_ticks(f.y_lo, f.y_hi)) {
    const double y = f.py(v);
    doc.line(f.left, y, right, y, grid);
    doc.line(f.left - 4, y, f.left, y, axis);
    doc.text(f.left - 6, y + 4, tick_label(v), 10, "end");
  }
  if (x_ticks) {
    for (double v : nice_ticks(f.x_lo, f.x_hi)) {
      const double x = f.px(v);
      doc.line(x, bottom, x, bottom + 4, axis);
      doc.text(x, bottom + 16, tick_label(v), 10, "middle");
    }
  }
  doc.line(f.left, bottom, right, bottom, axis);
  doc.line(f.left, f.top, f.left, bottom, axis);
  doc.text(f.left + f.width / 2, f.top - 8, title, 13, "middle");
  doc.text(f.left + f.width / 2, bottom + 32, x_label, 11, "middle");
  doc.text(f.left - 44, f.top + f.height / 2, y_label, 11, "middle", -90.0);
}

const std::string& palette(std::size_t i) {
  static const std::array<std::string, 10> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                     "#bcbd22", "#17becf"};
  return colors[i % colors.size()];
}

}  // namespace rlreach::svg
