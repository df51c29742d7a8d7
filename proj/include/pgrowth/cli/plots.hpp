#pragma once

#include <fmt/format.h>

#include <string>
#include <vector>

namespace pgrowth {

struct PlotSeries {
  std::string column;
  std::string label;
};

/// Stand-alone matplotlib script that plots `series` against column `x` of `csv`. An optional
/// reference power law c * x^slope (anchored at the first point of the first series) is overlaid.
inline std::string plot_script(const std::string& csv, const std::string& x, const std::vector<PlotSeries>& series,
                               const std::string& title, bool log_x, bool log_y, const std::string& png,
                               const std::string& reference_slope = "", const std::string& hline = "") {
  std::string lines;
  for (const auto& s : series)
    lines += fmt::format("ax.plot(col(\"{}\"), col(\"{}\"), marker=\"o\", label=\"{}\")\n", x, s.column, s.label);
  std::string extra;
  if (!reference_slope.empty())
    extra += fmt::format(
        "xs, ys = col(\"{0}\"), col(\"{1}\")\n"
        "ax.plot(xs, [ys[0] * (v / xs[0]) ** ({2}) for v in xs], \"k--\", label=\"slope {2}\")\n",
        x, series.front().column, reference_slope);
  if (!hline.empty()) extra += fmt::format("ax.axhline({0}, color=\"k\", linestyle=\":\", label=\"{0}\")\n", hline);
  return fmt::format(
      "#!/usr/bin/env python3\n"
      "# Reproduces {png} from {csv}. Usage: python3 <this script> [directory]\n"
      "import csv, os, sys\n"
      "import matplotlib\n"
      "matplotlib.use(\"Agg\")\n"
      "import matplotlib.pyplot as plt\n"
      "\n"
      "here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))\n"
      "with open(os.path.join(here, \"{csv}\")) as f:\n"
      "    rows = list(csv.DictReader(f))\n"
      "\n"
      "def col(name):\n"
      "    return [float(r[name]) for r in rows]\n"
      "\n"
      "fig, ax = plt.subplots()\n"
      "{lines}{extra}"
      "ax.set_xscale(\"{xs}\")\n"
      "ax.set_yscale(\"{ys}\")\n"
      "ax.set_xlabel(\"{x}\")\n"
      "ax.set_title(\"{title}\")\n"
      "ax.legend()\n"
      "fig.savefig(os.path.join(here, \"{png}\"), dpi=150)\n",
      fmt::arg("png", png), fmt::arg("csv", csv), fmt::arg("lines", lines), fmt::arg("extra", extra),
      fmt::arg("xs", log_x ? "log" : "linear"), fmt::arg("ys", log_y ? "log" : "linear"), fmt::arg("x", x),
      fmt::arg("title", title));
}

}  // namespace pgrowth
