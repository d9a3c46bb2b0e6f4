#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rlreach/evaluation.hpp"
#include "rlreach/experiment.hpp"

namespace rlreach::report {

struct Point {
  double x;
  double y;
  bool operator==(const Point&) const = default;
};

struct Series {
  std::string label;
  std::vector<Point> points;

  bool operator==(const Series&) const = default;
  // x strictly increasing, all values finite.
  void validate() const;
};

// Centered rolling mean: point i averages the min(window, n) consecutive points
// nearest to it, the block shifted inward at the edges.
Series smooth(const Series& series, std::size_t window);

// Long-format sidecar: series,x,y.
std::string series_to_csv(const std::vector<Series>& series);
std::vector<Series> series_from_csv(std::string_view text);

struct Figure {
  std::string svg;
  std::string data_csv;
};

// Per-seed smoothed curves plus their pointwise mean (last series, label "mean").
std::vector<Series> training_curve_data(const std::vector<Series>& raw_per_seed, std::size_t window);
// Renders already-plotted series; the final series is drawn bold.
std::string render_training_curves(const std::vector<Series>& plotted, std::string_view title);
Figure training_curves_figure(const std::vector<Series>& raw_per_seed, std::size_t window,
                              std::string_view title);

struct WrittenFigure {
  std::filesystem::path svg_path;
  std::filesystem::path data_path;
};

inline constexpr std::size_t kDefaultSmoothingWindow = 50;

// Reads every completed seed's training log; ValidationError when there is none.
WrittenFigure emit_training_curves(const experiment::Workspace& ws, std::int64_t exp_id,
                                   std::size_t window = kDefaultSmoothingWindow);
std::string training_curves_title(std::int64_t exp_id);

// Joint angles, ee vs goal per axis, reward, distance, velocity and acceleration against step.
Figure emit_episode_panels(const evaluation::EpisodeLog& log);
inline const std::vector<std::string>& episode_panel_ids() {
  static const std::vector<std::string> ids = {"joint_angles", "ee_vs_goal", "reward",
                                               "distance",     "velocity",   "acceleration"};
  return ids;
}

// Bars in ascending exp_id order; std_return whiskers for mean_return; [0,1] axis for ratios.
Figure emit_benchmark_comparison(const std::vector<evaluation::BenchmarkRow>& rows,
                                 const std::string& metric, std::vector<std::int64_t> exp_ids);
WrittenFigure write_figure(const std::filesystem::path& svg_path, const Figure& figure);
std::filesystem::path sidecar_path(const std::filesystem::path& svg_path);

}  // namespace rlreach::report
