#include <gtest/gtest.h>

#include <filesystem>

#include "stresslab/report.hpp"
#include "support.hpp"

using namespace stresslab::report;

namespace {

bool well_formed(const std::string& svg) {
  return svg.rfind("<svg", 0) == 0 && svg.find("</svg>") != std::string::npos;
}

}  // namespace

TEST(Svg, FiguresAreDeterministic) {
  std::vector<Series> s{{"VaR", {0.05, 0.07}}, {"CVaR", {0.08, 0.1}}};
  auto a = svg_grouped_bars("t", {"A", "B"}, s);
  EXPECT_EQ(a, svg_grouped_bars("t", {"A", "B"}, s));
  EXPECT_TRUE(well_formed(a));
  EXPECT_TRUE(well_formed(svg_box_panels("b", {"p"}, {{{"g1", {1, 2, 3, 4, 5}}, {"g2", {2, 2, 2}}}})));
  EXPECT_TRUE(well_formed(svg_scatter("s", "x", "y", {1, 2, 3}, {3, 1, 2})));
  EXPECT_TRUE(well_formed(svg_heatmap("h", {"r"}, {"c1", "c2"}, {{0.0, 1.0}})));
}

TEST(Svg, EscapesText) {
  auto svg = svg_scatter("a<b & c", "x", "y", {1}, {1});
  EXPECT_EQ(svg.find("a<b"), std::string::npos);
  EXPECT_NE(svg.find("&lt;"), std::string::npos);
}

TEST(Svg, EmptyInputsStillRender) {
  EXPECT_TRUE(well_formed(svg_scatter("s", "x", "y", {}, {})));
  EXPECT_TRUE(well_formed(svg_grouped_bars("t", {}, {})));
}

TEST(WriteReport, ListsMissingInputs) {
  testsupport::TempDir dir("report");
  auto r = write_report(dir.path());
  EXPECT_TRUE(r.figures.empty());
  EXPECT_FALSE(r.missing.empty());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "report/summary.md"));
}
