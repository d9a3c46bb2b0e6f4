#include "rlreach/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rlreach/csv.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/io.hpp"
#include "rlreach/svg.hpp"

namespace rlreach::report {

namespace fs = std::filesystem;

void Series::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw ValidationError("series '" + label + "' has a non-finite point");
    }
    if (i > 0 && !(points[i].x > points[i - 1].x)) {
      throw ValidationError("series '" + label + "' x values are not strictly increasing");
    }
  }
}

Series smooth(const Series& series, std::size_t window) {
  if (window < 1) throw ValidationError("smoothing window must be >= 1");
  Series out{series.label, series.points};
  const std::size_t n = series.points.size();
  if (n == 0) return out;
  const std::size_t w = std::min(window, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t back = (w - 1) / 2;
    std::size_t start = i >= back ? i - back : 0;
    start = std::min(start, n - w);
    double sum = 0.0;
    for (std::size_t j = start; j < start + w; ++j) sum += series.points[j].y;
    out.points[i].y = sum / static_cast<double>(w);
  }
  return out;
}

std::string series_to_csv(const std::vector<Series>& series) {
  csv::Table table;
  table.header = {"series", "x", "y"};
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      table.rows.push_back({s.label, io::format_double(p.x), io::format_double(p.y)});
    }
  }
  return csv::emit(table);
}

std::vector<Series> series_from_csv(std::string_view text) {
  const auto table = csv::parse(text);
  if (table.header != std::vector<std::string>{"series", "x", "y"}) {
    throw ParseError("plot data: expected header series,x,y");
  }
  std::vector<Series> out;
  for (const auto& row : table.rows) {
    if (out.empty() || out.back().label != row[0]) out.push_back(Series{row[0], {}});
    out.back().points.push_back({io::parse_double(row[1]), io::parse_double(row[2])});
  }
  return out;
}

// ------------------------------------------------------------------ training curves

std::vector<Series> training_curve_data(const std::vector<Series>& raw_per_seed, std::size_t window) {
  if (raw_per_seed.empty()) throw ValidationError("no seed curves to plot");
  std::vector<Series> out;
  std::size_t common = raw_per_seed.front().points.size();
  for (const auto& s : raw_per_seed) {
    s.validate();
    out.push_back(smooth(s, window));
    common = std::min(common, s.points.size());
  }
  Series mean{"mean", {}};
  for (std::size_t i = 0; i < common; ++i) {
    double sum = 0.0;
    for (const auto& s : out) sum += s.points[i].y;
    mean.points.push_back({out.front().points[i].x, sum / static_cast<double>(out.size())});
  }
  out.push_back(std::move(mean));
  return out;
}

namespace {

struct Bounds {
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;

  void add(double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }

  svg::Frame frame(double left, double top, double width, double height) const {
    const auto [xl, xh] = svg::padded_range(x_lo, x_hi, 0.0);
    const auto [yl, yh] = svg::padded_range(y_lo, y_hi);
    return {left, top, width, height, xl, xh, yl, yh};
  }
};

std::vector<std::pair<double, double>> to_pixels(const svg::Frame& f, const std::vector<Point>& pts) {
  std::vector<std::pair<double, double>> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.emplace_back(f.px(p.x), f.py(p.y));
  return out;
}

}  // namespace

std::string render_training_curves(const std::vector<Series>& plotted, std::string_view title) {
  if (plotted.empty()) throw ValidationError("nothing to plot");
  Bounds b;
  for (const auto& s : plotted) {
    for (const auto& p : s.points) b.add(p.x, p.y);
  }
  const double width = 800, height = 500;
  svg::Document doc(width, height);
  const auto frame = b.frame(80, 40, 560, 400);
  svg::draw_axes(doc, frame, title, "timestep", "episode return (smoothed)");

  for (std::size_t i = 0; i < plotted.size(); ++i) {
    const bool is_mean = i + 1 == plotted.size();
    svg::Style st;
    st.stroke = is_mean ? "#000000" : svg::palette(i);
    st.stroke_width = is_mean ? 2.5 : 1.0;
    st.css_class = is_mean ? "mean" : "seed";
    doc.polyline(to_pixels(frame, plotted[i].points), st, plotted[i].label);
    const double ly = 60 + 18.0 * static_cast<double>(i);
    doc.line(660, ly - 4, 684, ly - 4, svg::Style::stroke_only(st.stroke, st.stroke_width));
    doc.text(690, ly, plotted[i].label, 11);
  }
  return doc.str();
}

Figure training_curves_figure(const std::vector<Series>& raw_per_seed, std::size_t window,
                              std::string_view title) {
  const auto plotted = training_curve_data(raw_per_seed, window);
  return {render_training_curves(plotted, title), series_to_csv(plotted)};
}

std::string training_curves_title(std::int64_t exp_id) {
  return "Experiment " + std::to_string(exp_id) + " training curves";
}

fs::path sidecar_path(const fs::path& svg_path) {
  auto p = svg_path;
  p.replace_extension(".data.csv");
  return p;
}

WrittenFigure write_figure(const fs::path& svg_path, const Figure& figure) {
  std::error_code ec;
  fs::create_directories(svg_path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + svg_path.parent_path().string() + ": " + ec.message());
  const auto data = sidecar_path(svg_path);
  io::write_file_atomic(svg_path, figure.svg);
  io::write_file_atomic(data, figure.data_csv);
  return {svg_path, data};
}

WrittenFigure emit_training_curves(const experiment::Workspace& ws, std::int64_t exp_id,
                                   std::size_t window) {
  if (window < 1) throw ValidationError("smoothing window must be >= 1");
  const auto record = experiment::load_experiment(ws, exp_id);
  const auto seeds = experiment::completed_seeds(ws, record);
  if (seeds.empty()) {
    throw ValidationError("experiment " + std::to_string(exp_id) + " has no completed seed runs");
  }
  std::vector<Series> raw;
  for (auto k : seeds) {
    const auto log = agents::TrainingLog::from_csv(
        io::read_file(ws.seed_dir(exp_id, k) / "training_log.csv"));
    Series s{"seed_" + std::to_string(k), {}};
    for (const auto& row : log.rows) {
      s.points.push_back({static_cast<double>(row.timestep), row.episode_return});
    }
    raw.push_back(std::move(s));
  }
  const auto fig = training_curves_figure(raw, window, training_curves_title(exp_id));
  return write_figure(ws.figures_dir() / ("training_curves_exp_" + std::to_string(exp_id) + ".svg"), fig);
}

// ------------------------------------------------------------------ episode panels

Figure emit_episode_panels(const evaluation::EpisodeLog& log) {
  struct Line {
    std::string label;
    std::vector<Point> pts;
    bool dashed = false;
  };
  struct Panel {
    std::string id, title, y_label;
    std::vector<Line> lines;
  };

  auto column = [&](auto getter, const std::string& label, bool dashed = false) {
    Line l{label, {}, dashed};
    for (const auto& r : log.rows) l.pts.push_back({static_cast<double>(r.step), getter(r)});
    return l;
  };

  std::vector<Panel> panels;
  {
    Panel p{"joint_angles", "Joint angles", "rad", {}};
    for (std::size_t j = 0; j < log.n_joints; ++j) {
      p.lines.push_back(column([j](const auto& r) { return r.angles[j]; }, "q" + std::to_string(j + 1)));
    }
    panels.push_back(std::move(p));
  }
  {
    Panel p{"ee_vs_goal", "End effector vs goal", "m", {}};
    const char* axes[] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
      p.lines.push_back(column([k](const auto& r) { return r.ee[k]; }, std::string("ee_") + axes[k]));
    }
    for (int k = 0; k < 3; ++k) {
      p.lines.push_back(column([k](const auto& r) { return r.goal[k]; }, std::string("goal_") + axes[k], true));
    }
    panels.push_back(std::move(p));
  }
  panels.push_back({"reward", "Reward", "reward", {column([](const auto& r) { return r.reward; }, "reward")}});
  panels.push_back(
      {"distance", "Distance to goal", "m", {column([](const auto& r) { return r.distance_m; }, "distance_m")}});
  panels.push_back(
      {"velocity", "Velocity", "m/step", {column([](const auto& r) { return r.velocity; }, "velocity")}});
  panels.push_back({"acceleration", "Acceleration", "m/step^2",
                    {column([](const auto& r) { return r.acceleration; }, "acceleration")}});

  const double panel_w = 420, panel_h = 260;
  svg::Document doc(2 * panel_w, 3 * panel_h);
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    const double ox = static_cast<double>(i % 2) * panel_w;
    const double oy = static_cast<double>(i / 2) * panel_h;
    Bounds b;
    for (const auto& l : p.lines) {
      for (const auto& pt : l.pts) b.add(pt.x, pt.y);
    }
    const auto frame = b.frame(ox + 70, oy + 30, panel_w - 130, panel_h - 80);
    doc.open_group("panel-" + p.id);
    svg::draw_axes(doc, frame, p.title, "step", p.y_label);
    for (std::size_t k = 0; k < p.lines.size(); ++k) {
      svg::Style st;
      st.stroke = svg::palette(p.lines[k].dashed ? k - 3 : k);
      st.stroke_width = 1.5;
      if (p.lines[k].dashed) st.dash = "4 3";
      doc.polyline(to_pixels(frame, p.lines[k].pts), st, p.lines[k].label);
      const double ly = oy + 40 + 14.0 * static_cast<double>(k);
      doc.text(ox + panel_w - 56, ly, p.lines[k].label, 9);
    }
    doc.close_group();
  }
  return {doc.str(), log.to_csv()};
}

// ------------------------------------------------------------------ benchmark comparison

Figure emit_benchmark_comparison(const std::vector<evaluation::BenchmarkRow>& rows,
                                 const std::string& metric, std::vector<std::int64_t> exp_ids) {
  const auto& numeric = evaluation::numeric_benchmark_columns();
  if (std::find(numeric.begin(), numeric.end(), metric) == numeric.end()) {
    std::string valid;
    for (const auto& c : numeric) valid += (valid.empty() ? "" : ", ") + c;
    throw ValidationError("unknown metric '" + metric + "'; numeric columns: " + valid);
  }
  if (exp_ids.empty()) throw ValidationError("no experiment ids given");
  std::sort(exp_ids.begin(), exp_ids.end());
  exp_ids.erase(std::unique(exp_ids.begin(), exp_ids.end()), exp_ids.end());

  std::map<std::int64_t, const evaluation::BenchmarkRow*> by_id;
  for (const auto& r : rows) by_id[r.exp_id] = &r;
  std::vector<const evaluation::BenchmarkRow*> chosen;
  for (auto id : exp_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      std::string valid;
      for (const auto& [k, _] : by_id) valid += (valid.empty() ? "" : ", ") + std::to_string(k);
      throw ValidationError("exp_id " + std::to_string(id) + " is not in benchmark.csv; available: " +
                            (valid.empty() ? "(none)" : valid));
    }
    chosen.push_back(it->second);
  }

  const bool whiskers = metric == "mean_return";
  const bool ratio = metric.rfind("success_ratio_", 0) == 0;

  csv::Table table;
  table.header = {"exp_id", metric};
  if (whiskers) table.header.emplace_back("std_return");
  double lo = 0.0, hi = 0.0;
  for (const auto* r : chosen) {
    const double v = r->metric(metric);
    std::vector<std::string> row{io::format_int(r->exp_id), io::format_double(v)};
    double top = v, bottom = v;
    if (whiskers) {
      row.push_back(io::format_double(r->std_return));
      top += r->std_return;
      bottom -= r->std_return;
    }
    lo = std::min(lo, bottom);
    hi = std::max(hi, top);
    table.rows.push_back(std::move(row));
  }
  if (ratio) {
    lo = 0.0;
    hi = 1.0;
  } else {
    std::tie(lo, hi) = svg::padded_range(lo, hi);
  }

  const double width = 800, height = 500;
  svg::Document doc(width, height);
  const svg::Frame frame{80, 40, 680, 400, 0.0, static_cast<double>(chosen.size()), lo, hi};
  svg::draw_axes(doc, frame, metric + " by experiment", "experiment", metric, false);
  const double slot = frame.width / static_cast<double>(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto* r = chosen[i];
    const double v = r->metric(metric);
    const double cx = frame.left + slot * (static_cast<double>(i) + 0.5);
    const double bar_w = slot * 0.6;
    const double y0 = frame.py(std::clamp(0.0, lo, hi));
    const double y1 = frame.py(std::clamp(v, lo, hi));
    svg::Style bar{"#333333", 1.0, svg::palette(i), "", "bar"};
    doc.rect(cx - bar_w / 2, std::min(y0, y1), bar_w, std::abs(y1 - y0), bar);
    if (whiskers) {
      const svg::Style wk{"#000000", 1.5, "none", "", "whisker"};
      const double ya = frame.py(v - r->std_return), yb = frame.py(v + r->std_return);
      doc.line(cx, ya, cx, yb, wk);
      doc.line(cx - bar_w / 6, ya, cx + bar_w / 6, ya, wk);
      doc.line(cx - bar_w / 6, yb, cx + bar_w / 6, yb, wk);
    }
    doc.text(cx, frame.top + frame.height + 16, "exp " + std::to_string(r->exp_id), 11, "middle");
  }
  return {doc.str(), csv::emit(table)};
}

}  // namespace rlreach::report
