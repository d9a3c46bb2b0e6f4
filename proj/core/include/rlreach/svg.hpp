#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rlreach::svg {

// Fixed-precision coordinate text; never locale dependent.
std::string num(double v);
std::string escape(std::string_view text);

// Evenly spaced "nice" tick values (1/2/5 x 10^k) covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 5);
std::string tick_label(double v);

struct Style {
  std::string stroke = "#000000";
  double stroke_width = 1.0;
  std::string fill = "none";
  std::string dash;  // stroke-dasharray, empty for solid
  std::string css_class;

  static Style stroke_only(std::string color, double width) {
    Style s;
    s.stroke = std::move(color);
    s.stroke_width = width;
    return s;
  }
};

class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const Style& style);
  void line(double x1, double y1, double x2, double y2, const Style& style);
  void polyline(const std::vector<std::pair<double, double>>& pts, const Style& style,
                std::string_view data_label = {});
  void text(double x, double y, std::string_view content, double size = 12.0,
            std::string_view anchor = "start", double rotate = 0.0);
  void open_group(std::string_view id);
  void close_group();

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

// Maps a data rectangle onto a pixel rectangle (y grows downward on screen).
struct Frame {
  double left, top, width, height;
  double x_lo, x_hi, y_lo, y_hi;

  double px(double x) const;
  double py(double y) const;
};

// Expands a degenerate or empty range so that lo < hi.
std::pair<double, double> padded_range(double lo, double hi, double pad_fraction = 0.05);

// Draws axis lines, ticks, tick labels, axis titles and the panel title.
void draw_axes(Document& doc, const Frame& f, std::string_view title, std::string_view x_label,
               std::string_view y_label, bool x_ticks = true);

const std::string& palette(std::size_t i);

}  // namespace rlreach::svg
