#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "oracles.hpp"
#include "rlreach/errors.hpp"
#include "rlreach/io.hpp"
#include "rlreach/report.hpp"

using namespace rlreach;
using namespace rlreach::report;

namespace {

Series make_series(std::string label, std::vector<double> ys, double x0 = 1.0, double dx = 1.0) {
  Series s{std::move(label), {}};
  for (std::size_t i = 0; i < ys.size(); ++i) s.points.push_back({x0 + dx * double(i), ys[i]});
  return s;
}

std::vector<double> ys(const Series& s) {
  std::vector<double> out;
  for (const auto& p : s.points) out.push_back(p.y);
  return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

// Element names must nest properly; comments and the declaration are skipped.
bool balanced_xml(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = doc.find('<', i)) != std::string::npos) {
    const auto end = doc.find('>', i);
    if (end == std::string::npos) return false;
    const std::string tag = doc.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (tag.back() != '/') {
      stack.push_back(tag.substr(0, tag.find_first_of(" \n\t")));
    }
  }
  return stack.empty();
}

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, const std::string& series,
                                                       std::size_t from = 0) {
  const auto at = svg.find("data-series=\"" + series + "\"", from);
  if (at == std::string::npos) return {};
  const auto start = svg.find("points=\"", at) + 8;
  std::istringstream in(svg.substr(start, svg.find('"', start) - start));
  std::vector<std::pair<double, double>> out;
  std::string pair;
  while (in >> pair) {
    const auto comma = pair.find(',');
    out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
  }
  return out;
}

}  // namespace

TEST(Smooth, WindowOneIsIdentity) {
  const auto s = make_series("a", {3.0, -1.0, 4.0, 1.5});
  EXPECT_EQ(smooth(s, 1), s);
}

TEST(Smooth, ConstantSeriesStaysConstant) {
  const auto s = make_series("a", std::vector<double>(37, 2.5));
  for (std::size_t w : {2u, 5u, 50u}) EXPECT_EQ(ys(smooth(s, w)), std::vector<double>(37, 2.5));
}

TEST(Smooth, Examples) {
  EXPECT_EQ(ys(smooth(make_series("a", {0.0, 1.0}), 2)), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(ys(smooth(make_series("a", {1.0, 2.0, 3.0, 4.0, 5.0}), 3)), (std::vector<double>{2.0, 2.0, 3.0, 4.0, 4.0}));
  EXPECT_EQ(ys(smooth(make_series("a", {1.0, 2.0, 6.0}), 10)), (std::vector<double>{3.0, 3.0, 3.0}));
}

TEST(Smooth, KeepsXAndAveragesWindow) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(200);
  for (auto& y : v) y = g(rng);
  const auto s = make_series("a", v, 100.0, 100.0);
  const auto sm = smooth(s, 9);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(sm.points[i].x, s.points[i].x);
    const std::size_t lo = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(i) - 4, 0, 191);
    double m = 0.0;
    for (std::size_t k = lo; k < lo + 9; ++k) m += v[k] / 9.0;
    EXPECT_NEAR(sm.points[i].y, m, 1e-12);
  }
  EXPECT_THROW(smooth(s, 0), ValidationError);
}

TEST(Series, ValidationAndCsvRoundTrip) {
  auto bad = make_series("a", {1.0, 2.0});
  bad.points[1].x = bad.points[0].x;
  EXPECT_THROW(bad.validate(), ValidationError);
  const std::vector<Series> ss{make_series("seed_0", {0.1, 1.0 / 3.0}), make_series("mean, \"all\"", {-2.0})};
  const auto text = series_to_csv(ss);
  EXPECT_EQ(text.substr(0, text.find('\n')), "series,x,y");
  const auto back = series_from_csv(text);
  EXPECT_EQ(back, ss);
  EXPECT_EQ(series_to_csv(back), text);
}

TEST(TrainingCurves, OneLinePerSeedPlusMean) {
  const std::vector<Series> raw{make_series("seed_0", {1, 2, 3, 4}), make_series("seed_1", {2, 2, 2, 2}),
                                make_series("seed_2", {0, 0, 0})};
  const auto data = training_curve_data(raw, 1);
  ASSERT_EQ(data.size(), 4u);
  EXPECT_EQ(data.back().label, "mean");
  EXPECT_EQ(ys(data.back()), (std::vector<double>{1.0, 4.0 / 3.0, 5.0 / 3.0}));
  const auto fig = training_curves_figure(raw, 1, "Experiment 3 training curves");
  EXPECT_EQ(count(fig.svg, "<polyline"), 4u);
  EXPECT_EQ(count(fig.svg, "class=\"seed\""), 3u);
  EXPECT_EQ(count(fig.svg, "class=\"mean\""), 1u);
  EXPECT_NE(fig.svg.find("Experiment 3 training curves"), std::string::npos);
}

TEST(TrainingCurves, SingleSeedMeanEqualsSeed) {
  const auto data = training_curve_data({make_series("seed_0", {5, 1, 4, 1, 5, 9, 2, 6})}, 3);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].points, data[1].points);
}

TEST(TrainingCurves, SidecarReplotIsByteIdentical) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(-10.0, 3.0);
  std::vector<Series> raw;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v(120);
    for (auto& y : v) y = g(rng);
    raw.push_back(make_series("seed_" + std::to_string(k), v, 100.0, 100.0));
  }
  const auto fig = training_curves_figure(raw, 10, "t");
  const auto replot = render_training_curves(series_from_csv(fig.data_csv), "t");
  EXPECT_EQ(replot, fig.svg);
  EXPECT_EQ(series_to_csv(series_from_csv(fig.data_csv)), fig.data_csv);
}

TEST(TrainingCurves, WellFormedSvg) {
  const auto fig = training_curves_figure({make_series("seed_<0>&", {1, 2, 3})}, 2, "a < b & c");
  EXPECT_TRUE(balanced_xml(fig.svg));
  EXPECT_NE(fig.svg.find("viewBox=\"0 0 800.00 500.00\""), std::string::npos);
  EXPECT_NE(fig.svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(fig.svg.rfind("<?xml", 0), 0u);
}

TEST(TrainingCurves, EmitFromWorkspace) {
  oracle::TempDir tmp("plot");
  experiment::Workspace ws(tmp.path());
  const auto rec = experiment::create_experiment(ws, "random", "reach-v1", 1000, 2, 0, nlohmann::json::object());
  EXPECT_THROW(emit_training_curves(ws, rec.exp_id), ValidationError);
  experiment::run_experiment(ws, rec.exp_id);
  const auto out = emit_training_curves(ws, rec.exp_id, 1);
  EXPECT_EQ(out.svg_path, ws.figures_dir() / "training_curves_exp_1.svg");
  EXPECT_EQ(out.data_path, sidecar_path(out.svg_path));
  const auto data = series_from_csv(io::read_file(out.data_path));
  ASSERT_EQ(data.size(), 3u);
  // Window 1 plots the raw training log.
  const auto log = agents::TrainingLog::from_csv(io::read_file(ws.seed_dir(rec.exp_id, 1) / "training_log.csv"));
  ASSERT_EQ(data[1].points.size(), log.rows.size());
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    EXPECT_EQ(data[1].points[i].x, double(log.rows[i].timestep));
    EXPECT_EQ(data[1].points[i].y, log.rows[i].episode_return);
  }
  EXPECT_TRUE(balanced_xml(io::read_file(out.svg_path)));
}

TEST(EpisodePanels, InventoryAndSidecar) {
  const auto log = evaluation::log_episode(nn::zero_policy(9, 6), "reach-v1", 3, false);
  const auto fig = emit_episode_panels(log);
  for (const auto& id : episode_panel_ids()) EXPECT_NE(fig.svg.find("<g id=\"panel-" + id + "\">"), std::string::npos);
  EXPECT_EQ(count(fig.svg, "<g id=\"panel-"), 6u);
  EXPECT_EQ(count(fig.svg, "<polyline"), 6u + 6u + 4u);
  EXPECT_EQ(count(fig.svg, "stroke-dasharray"), 3u);
  EXPECT_EQ(fig.data_csv, log.to_csv());
  EXPECT_TRUE(balanced_xml(fig.svg));
}

TEST(EpisodePanels, StayStillGivesFlatLines) {
  auto hook = [](env::EnvInstance& e, std::int64_t) { e.place_goal(e.arm_state().ee_position + env::Vec3(0.05, 0, 0)); };
  const auto log = evaluation::log_episode(nn::zero_policy(9, 6), "reach-v1", 3, true, hook);
  const auto svg = emit_episode_panels(log).svg;
  for (const char* s : {"distance_m", "reward", "velocity", "q1", "q4"}) {
    const auto pts = polyline_points(svg, s);
    ASSERT_EQ(pts.size(), log.rows.size()) << s;
    for (const auto& p : pts) EXPECT_EQ(p.second, pts.front().second) << s;
  }
}

TEST(EpisodePanels, DistanceLineTracksLoggedDistance) {
  std::mt19937_64 rng(6);
  auto net = nn::Mlp::glorot(nn::chain_shapes(9, {8}, 6), rng, nn::Activation::Tanh);
  const auto log = evaluation::log_episode(nn::GaussianPolicy{net, {}}, "reach-v1", 8, true);
  const auto pts = polyline_points(emit_episode_panels(log).svg, "distance_m");
  ASSERT_EQ(pts.size(), log.rows.size());
  // Pixel y is affine in distance: check it with two anchor points.
  double lo = 1e9, hi = -1e9;
  std::size_t ilo = 0, ihi = 0;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    if (log.rows[i].distance_m < lo) lo = log.rows[i].distance_m, ilo = i;
    if (log.rows[i].distance_m > hi) hi = log.rows[i].distance_m, ihi = i;
  }
  ASSERT_GT(hi, lo);
  const double scale = (pts[ihi].second - pts[ilo].second) / (hi - lo);
  EXPECT_LT(scale, 0.0);  // svg y grows downward
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].second, pts[ilo].second + scale * (log.rows[i].distance_m - lo), 0.02);
  }
}

namespace {

std::vector<evaluation::BenchmarkRow> bench_rows() {
  std::vector<evaluation::BenchmarkRow> rows(3);
  const double mr[] = {-5.0, -2.0, -8.0}, sr[] = {1.0, 0.5, 2.0}, succ[] = {0.2, 0.9, 0.0};
  for (int i = 0; i < 3; ++i) {
    rows[i].exp_id = 2 * i + 1;
    rows[i].mean_return = mr[i];
    rows[i].std_return = sr[i];
    rows[i].success_ratio_50mm = succ[i];
  }
  return rows;
}

}  // namespace

TEST(BenchmarkFigure, BarsWhiskersAndSidecar) {
  const auto fig = emit_benchmark_comparison(bench_rows(), "mean_return", {5, 1, 5});
  EXPECT_EQ(count(fig.svg, "class=\"bar\""), 2u);
  EXPECT_EQ(count(fig.svg, "class=\"whisker\""), 6u);
  EXPECT_LT(fig.svg.find(">exp 1<"), fig.svg.find(">exp 5<"));
  EXPECT_EQ(fig.data_csv, "exp_id,mean_return,std_return\n1,-5,1\n5,-8,2\n");
  EXPECT_TRUE(balanced_xml(fig.svg));
}

TEST(BenchmarkFigure, RatioMetricsUseUnitAxis) {
  const auto fig = emit_benchmark_comparison(bench_rows(), "success_ratio_50mm", {1, 3});
  EXPECT_EQ(count(fig.svg, "class=\"whisker\""), 0u);
  EXPECT_NE(fig.svg.find(">1</text>"), std::string::npos);
  EXPECT_NE(fig.svg.find(">0</text>"), std::string::npos);
  EXPECT_EQ(fig.svg.find(">1.2</text>"), std::string::npos);
  EXPECT_EQ(fig.data_csv, "exp_id,success_ratio_50mm\n1,0.2\n3,0.9\n");
}

TEST(BenchmarkFigure, Errors) {
  try {
    emit_benchmark_comparison(bench_rows(), "mean_return", {1, 4});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("available: 1, 3, 5"), std::string::npos);
  }
  EXPECT_THROW(emit_benchmark_comparison(bench_rows(), "algo", {1}), ValidationError);
  EXPECT_THROW(emit_benchmark_comparison(bench_rows(), "mean_return", {}), ValidationError);
}
