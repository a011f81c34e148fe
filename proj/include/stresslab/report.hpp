#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stresslab::report {

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Grouped vertical bars: one group per category, one bar per series.
std::string svg_grouped_bars(const std::string& title, const std::vector<std::string>& categories,
                             const std::vector<Series>& series);

/// Box plots (quartiles, whiskers at 1.5 IQR) per group, one panel per series name.
std::string svg_box_panels(const std::string& title, const std::vector<std::string>& panels,
                           const std::vector<std::vector<Series>>& groups_per_panel);

std::string svg_scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<double>& x, const std::vector<double>& y);

/// Cell colour intensity proportional to value in [0, 1].
std::string svg_heatmap(const std::string& title, const std::vector<std::string>& rows,
                        const std::vector<std::string>& cols, const std::vector<std::vector<double>>& values);

struct ReportResult {
  std::vector<std::string> figures;  // relative paths under report/
  std::vector<std::string> missing;  // input CSVs that were not found
};

/// Reads the emitted CSVs under `run_dir` and writes report/*.svg plus report/summary.md.
ReportResult write_report(const std::filesystem::path& run_dir);

}  // namespace stresslab::report
