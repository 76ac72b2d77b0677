#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "util.hpp"

// Report emission: RFC-4180 CSV (CRLF), ordered JSON, and hand-rolled SVG
// polyline plots. Everything routes through fmt_g so reruns with the same
// config are byte-identical; no timestamps anywhere.

namespace lab {

using json = nlohmann::ordered_json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static std::string num(double v) { return fmt_g(v, 17); }
  void row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
};

std::string csv_escape(const std::string& cell);
std::string to_csv(const CsvTable& t);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color;  // empty -> palette
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
  int width = 640, height = 420;
};

std::string render_svg(const PlotSpec& spec);

// --out flag if nonempty, else $BEAMLAB_OUT, else ./out; created if missing.
std::string resolve_output_dir(const std::string& flag_value);
std::string join_path(const std::string& dir, const std::string& name);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lab
