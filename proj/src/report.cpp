#include "stresslab/report.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "stresslab/csv.hpp"
#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"
#include "stresslab/risk_engine.hpp"

namespace fs = std::filesystem;

namespace stresslab::report {

namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Canvas {
  double w, h;
  std::string body;

  void text(double x, double y, const std::string& s, int size = 11, const char* anchor = "middle") {
    body += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + std::to_string(size) +
            "\" text-anchor=\"" + anchor + "\">" + esc(s) + "</text>\n";
  }
  void rect(double x, double y, double rw, double rh, const std::string& fill, const std::string& extra = "") {
    body += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(rw) + "\" height=\"" + fmt(rh) +
            "\" fill=\"" + fill + "\"" + extra + "/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#333") {
    body += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" + fmt(y2) +
            "\" stroke=\"" + stroke + "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) + "\" r=\"" + fmt(r) + "\" fill=\"" + fill +
            "\" fill-opacity=\"0.6\"/>\n";
  }
  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
           "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\" font-family=\"sans-serif\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body + "</svg>\n";
  }
};

struct Scale {
  double lo, hi, p0, p1;  // data range -> pixel range
  double operator()(double v) const { return hi == lo ? 0.5 * (p0 + p1) : p0 + (v - lo) / (hi - lo) * (p1 - p0); }
};

std::pair<double, double> range_of(const std::vector<double>& v, bool include_zero) {
  double lo = include_zero ? 0.0 : std::numeric_limits<double>::infinity();
  double hi = include_zero ? 0.0 : -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (lo == hi) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {include_zero && lo == 0.0 ? 0.0 : lo - pad, hi + pad};
}

void y_axis(Canvas& c, const Scale& s, double x) {
  c.line(x, s.p0, x, s.p1);
  for (int k = 0; k <= 4; ++k) {
    const double v = s.lo + (s.hi - s.lo) * k / 4.0;
    c.line(x - 4, s(v), x, s(v));
    c.text(x - 6, s(v) + 4, fmt(v), 10, "end");
  }
}

}  // namespace

std::string svg_grouped_bars(const std::string& title, const std::vector<std::string>& categories,
                             const std::vector<Series>& series) {
  Canvas c{640, 400, {}};
  c.text(320, 24, title, 14);
  std::vector<double> all;
  for (const auto& s : series) all.insert(all.end(), s.values.begin(), s.values.end());
  auto [lo, hi] = range_of(all, true);
  Scale y{lo, hi, 340, 50};
  y_axis(c, y, 70);
  const double group_w = 540.0 / std::max<std::size_t>(1, categories.size());
  const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, series.size());
  for (std::size_t g = 0; g < categories.size(); ++g) {
    const double gx = 80 + g * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = g < series[s].values.size() ? series[s].values[g] : 0.0;
      if (!std::isfinite(v)) continue;
      const double top = y(std::max(v, 0.0)), base = y(std::min(v, 0.0));
      c.rect(gx + 0.1 * group_w + s * bar_w, top, bar_w - 2, base - top, kPalette[s % 7]);
    }
    c.text(gx + group_w / 2, 358, categories[g]);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    c.rect(90 + s * 120, 372, 10, 10, kPalette[s % 7]);
    c.text(104 + s * 120, 381, series[s].name, 10, "start");
  }
  return c.str();
}

std::string svg_box_panels(const std::string& title, const std::vector<std::string>& panels,
                           const std::vector<std::vector<Series>>& groups) {
  const double panel_w = 300;
  Canvas c{40 + panel_w * panels.size(), 380, {}};
  c.text(c.w / 2, 24, title, 14);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double x0 = 40 + p * panel_w;
    std::vector<double> all;
    for (const auto& g : groups[p]) all.insert(all.end(), g.values.begin(), g.values.end());
    auto [lo, hi] = range_of(all, false);
    Scale y{lo, hi, 320, 50};
    y_axis(c, y, x0 + 30);
    c.text(x0 + panel_w / 2, 44, panels[p], 12);
    const double bw = (panel_w - 50) / std::max<std::size_t>(1, groups[p].size());
    for (std::size_t g = 0; g < groups[p].size(); ++g) {
      auto v = groups[p][g].values;
      const double cx = x0 + 40 + (g + 0.5) * bw;
      c.text(cx, 336 + (g % 2) * 12, groups[p][g].name, 9);
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      const double q1 = risk::quantile_sorted(v, 0.25), q2 = risk::quantile_sorted(v, 0.5),
                   q3 = risk::quantile_sorted(v, 0.75), iqr = q3 - q1;
      const double wlo = *std::lower_bound(v.begin(), v.end(), q1 - 1.5 * iqr);
      const double whi = *(std::upper_bound(v.begin(), v.end(), q3 + 1.5 * iqr) - 1);
      c.line(cx, y(wlo), cx, y(whi));
      c.rect(cx - bw * 0.3, y(q3), bw * 0.6, std::max(1.0, y(q1) - y(q3)), kPalette[g % 7], " fill-opacity=\"0.7\"");
      c.line(cx - bw * 0.3, y(q2), cx + bw * 0.3, y(q2), "#000");
      for (double x : v) {
        if (x < wlo || x > whi) c.circle(cx, y(x), 2, "#000");
      }
    }
  }
  return c.str();
}

std::string svg_scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                        const std::vector<double>& x, const std::vector<double>& y) {
  Canvas c{520, 440, {}};
  c.text(260, 24, title, 14);
  auto [xl, xh] = range_of(x, false);
  auto [yl, yh] = range_of(y, false);
  Scale sx{xl, xh, 70, 490}, sy{yl, yh, 390, 50};
  y_axis(c, sy, 70);
  c.line(70, 390, 490, 390);
  for (int k = 0; k <= 4; ++k) {
    const double v = xl + (xh - xl) * k / 4.0;
    c.text(sx(v), 404, fmt(v), 10);
  }
  c.text(280, 426, x_label, 11);
  c.body += "<text x=\"16\" y=\"220\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 16 220)\">" +
            esc(y_label) + "</text>\n";
  const double lo = std::max(xl, yl), hi = std::min(xh, yh);
  if (lo < hi) c.line(sx(lo), sy(lo), sx(hi), sy(hi), "#bbb");
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) c.circle(sx(x[i]), sy(y[i]), 3, kPalette[0]);
  }
  return c.str();
}

std::string svg_heatmap(const std::string& title, const std::vector<std::string>& rows,
                        const std::vector<std::string>& cols, const std::vector<std::vector<double>>& values) {
  const double cw = 110, ch = 30;
  Canvas c{140 + cw * cols.size(), 80 + ch * rows.size(), {}};
  c.text(c.w / 2, 24, title, 14);
  for (std::size_t j = 0; j < cols.size(); ++j) c.text(140 + (j + 0.5) * cw, 60, cols[j]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.text(132, 70 + (i + 0.6) * ch, rows[i], 11, "end");
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = values[i][j];
      const double t = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", static_cast<int>(255 - 177 * t), static_cast<int>(255 - 134 * t),
                    static_cast<int>(255 - 88 * t));
      c.rect(140 + j * cw, 70 + i * ch, cw - 2, ch - 2, fill);
      c.text(140 + (j + 0.5) * cw, 70 + (i + 0.6) * ch, std::isfinite(v) ? fmt(v) : "n/a", 10);
    }
  }
  return c.str();
}

// --- report assembly ------------------------------------------------------------------

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t col(const std::string& n) const {
    auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw ParseError("report: CSV column '" + n + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table load(const fs::path& p) {
  auto rows = csv::read_file(p);
  Table t;
  if (rows.empty()) return t;
  t.header = rows.front().fields;
  for (std::size_t i = 1; i < rows.size(); ++i) t.rows.push_back(rows[i].fields);
  return t;
}

double num(const std::string& s) { return s == "nan" || s.empty() ? std::nan("") : std::stod(s); }

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw MissingArtifactError("cannot write " + p.string());
  out << text;
}

}  // namespace

ReportResult write_report(const fs::path& run_dir) {
  ReportResult res;
  struct Fig {
    std::string file, caption;
    std::vector<std::string> sources;
  };
  std::vector<Fig> figs;
  auto have = [&](const std::string& rel) {
    if (fs::exists(run_dir / rel)) return true;
    res.missing.push_back(rel);
    return false;
  };

  // Baseline methods per portfolio.
  {
    std::vector<std::string> sources;
    std::vector<std::string> cats;
    std::vector<Series> series;
    for (const std::string id : {"A", "B"}) {
      const std::string rel = "baselines/baselines_" + id + ".csv";
      if (!fs::exists(run_dir / rel)) continue;
      const auto t = load(run_dir / rel);
      for (const auto& row : t.rows) {
        cats.push_back(id + ":" + row[t.col("method")]);
      }
      sources.push_back(rel);
    }
    if (sources.empty()) {
      res.missing.push_back("baselines/baselines_A.csv");
    } else {
      Series v{"VaR95", {}}, cv{"CVaR95", {}};
      for (const auto& rel : sources) {
        const auto t = load(run_dir / rel);
        for (const auto& row : t.rows) {
          v.values.push_back(num(row[t.col("var95")]));
          cv.values.push_back(num(row[t.col("cvar95")]));
        }
      }
      series = {v, cv};
      write_file(run_dir / "report/baselines.svg", svg_grouped_bars("63-day baseline VaR and CVaR", cats, series));
      figs.push_back({"baselines.svg", "Baseline methods (bootstrap, EWMA, GARCH-t) per portfolio", sources});
    }
  }

  // Macro shock distributions per country.
  if (have("diagnostics/macro_shocks.csv")) {
    const auto t = load(run_dir / "diagnostics/macro_shocks.csv");
    std::map<std::string, std::array<std::vector<double>, 3>> by_country;
    for (const auto& row : t.rows) {
      auto& b = by_country[row[t.col("country")]];
      b[0].push_back(num(row[t.col("d_gdp")]));
      b[1].push_back(num(row[t.col("d_inflation")]));
      b[2].push_back(num(row[t.col("d_rate")]));
    }
    std::vector<std::vector<Series>> groups(3);
    for (const auto& [country, vals] : by_country) {
      for (int k = 0; k < 3; ++k) groups[static_cast<std::size_t>(k)].push_back({country, vals[static_cast<std::size_t>(k)]});
    }
    write_file(run_dir / "report/macro_shocks.svg",
               svg_box_panels("Generated macro shocks by country (pp)", {"GDP growth", "Inflation", "Policy rate"}, groups));
    figs.push_back({"macro_shocks.svg", "Distribution of generated shocks per country", {"diagnostics/macro_shocks.csv"}});
  }

  // Linear vs nonlinear VaR multiples.
  if (have("simulate/risk_report.csv")) {
    const auto t = load(run_dir / "simulate/risk_report.csv");
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> pairs;
    for (const auto& row : t.rows) {
      auto& p = pairs[{row[t.col("scenario_hash")], row[t.col("portfolio_id")]}];
      const std::string ch = row[t.col("channel")];
      if (ch == "linear") p.first = num(row[t.col("var_mult")]);
      if (ch == "nonlinear") p.second = num(row[t.col("var_mult")]);
    }
    std::vector<double> x, y;
    for (const auto& [k, v] : pairs) {
      x.push_back(v.first);
      y.push_back(v.second);
    }
    write_file(run_dir / "report/channel_scatter.svg",
               svg_scatter("Scenario VaR multiples: linear vs nonlinear channel", "linear VaR multiple",
                           "nonlinear VaR multiple", x, y));
    figs.push_back({"channel_scatter.svg", "Per-scenario VaR multiples across channels", {"simulate/risk_report.csv"}});
  }

  // ANOVA partial eta squared.
  if (have("diagnostics/anova.csv")) {
    const auto t = load(run_dir / "diagnostics/anova.csv");
    std::vector<std::string> effects, metrics{"var_mult", "cvar_mult"};
    std::map<std::pair<std::string, std::string>, double> val;
    for (const auto& row : t.rows) {
      const auto& e = row[t.col("effect")];
      if (std::find(effects.begin(), effects.end(), e) == effects.end()) effects.push_back(e);
      val[{e, row[t.col("metric")]}] = num(row[t.col("partial_eta2")]);
    }
    std::vector<std::vector<double>> grid;
    for (const auto& e : effects) {
      std::vector<double> r;
      for (const auto& m : metrics) {
        auto it = val.find({e, m});
        r.push_back(it == val.end() ? std::nan("") : it->second);
      }
      grid.push_back(r);
    }
    write_file(run_dir / "report/anova_heatmap.svg",
               svg_heatmap("Partial eta squared, linear-channel multiples", effects, metrics, grid));
    figs.push_back({"anova_heatmap.svg", "ANOVA variance decomposition", {"diagnostics/anova.csv"}});
  }

  std::string md = "# Stress run summary\n\n| Figure | Description | Source | SHA-256 |\n|---|---|---|---|\n";
  for (const auto& f : figs) {
    for (const auto& s : f.sources) {
      md += "| [" + f.file + "](" + f.file + ") | " + f.caption + " | [" + s + "](../" + s + ") | `" +
            sha256_file_hex(run_dir / s) + "` |\n";
    }
    res.figures.push_back("report/" + f.file);
  }
  if (!res.missing.empty()) {
    md += "\nMissing inputs (figures skipped):\n\n";
    for (const auto& m : res.missing) md += "- " + m + "\n";
  }
  md += "\nArtifact digests for every file are listed in run_artifacts_index.json.\n";
  write_file(run_dir / "report/summary.md", md);
  return res;
}

}  // namespace stresslab::report
