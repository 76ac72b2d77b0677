#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lab {

std::string csv_escape(const std::string& cell) {
  bool needs = cell.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += "\r\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

double tr_log(double v, bool lg) { return lg ? std::log10(v) : v; }

std::string tick_label(double v, bool lg) {
  return fmt_g(lg ? std::pow(10.0, v) : v, 3);
}

std::string esc_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  const double L = 70, R = 20, T = 34, B = 50;
  const double W = spec.width, H = spec.height;
  const double pw = W - L - R, ph = H - T - B;

  double xmin = INF, xmax = -INF, ymin = INF, ymax = -INF;
  for (const auto& s : spec.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double xv = s.x[i], yv = s.y[i];
      if (spec.logx && !(xv > 0)) continue;
      if (spec.logy && !(yv > 0)) continue;
      xv = tr_log(xv, spec.logx);
      yv = tr_log(yv, spec.logy);
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      xmin = std::min(xmin, xv); xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv); ymax = std::max(ymax, yv);
    }
  if (!(xmin <= xmax)) { xmin = 0; xmax = 1; }
  if (!(ymin <= ymax)) { ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return T + (ymax - v) / (ymax - ymin) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_g(W, 6) +
         "\" height=\"" + fmt_g(H, 6) + "\" viewBox=\"0 0 " + fmt_g(W, 6) + " " +
         fmt_g(H, 6) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_f(W / 2, 1) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + esc_xml(spec.title) + "</text>\n";

  // frame
  svg += "<rect x=\"" + fmt_f(L, 1) + "\" y=\"" + fmt_f(T, 1) + "\" width=\"" +
         fmt_f(pw, 1) + "\" height=\"" + fmt_f(ph, 1) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";

  // ticks: 5 per axis in transformed space
  for (int k = 0; k <= 4; ++k) {
    double xv = xmin + (xmax - xmin) * k / 4.0;
    double yv = ymin + (ymax - ymin) * k / 4.0;
    double gx = px(xv), gy = py(yv);
    svg += "<line x1=\"" + fmt_f(gx, 1) + "\" y1=\"" + fmt_f(T + ph, 1) +
           "\" x2=\"" + fmt_f(gx, 1) + "\" y2=\"" + fmt_f(T + ph + 5, 1) +
           "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + fmt_f(gx, 1) + "\" y=\"" + fmt_f(T + ph + 18, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_label(xv, spec.logx) + "</text>\n";
    svg += "<line x1=\"" + fmt_f(L - 5, 1) + "\" y1=\"" + fmt_f(gy, 1) +
           "\" x2=\"" + fmt_f(L, 1) + "\" y2=\"" + fmt_f(gy, 1) +
           "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + fmt_f(L - 8, 1) + "\" y=\"" + fmt_f(gy + 4, 1) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           tick_label(yv, spec.logy) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_f(L + pw / 2, 1) + "\" y=\"" + fmt_f(H - 10, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         esc_xml(spec.xlabel) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt_f(T + ph / 2, 1) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " + fmt_f(T + ph / 2, 1) + ")\">" +
         esc_xml(spec.ylabel) + "</text>\n";

  for (size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    std::string color = s.color.empty() ? kPalette[si % 5] : s.color;
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      double xv = s.x[i], yv = s.y[i];
      if (spec.logx && !(xv > 0)) continue;
      if (spec.logy && !(yv > 0)) continue;
      xv = tr_log(xv, spec.logx);
      yv = tr_log(yv, spec.logy);
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt_f(px(xv), 2) + "," + fmt_f(py(yv), 2);
      svg += "<circle cx=\"" + fmt_f(px(xv), 2) + "\" cy=\"" + fmt_f(py(yv), 2) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    if (!s.label.empty())
      svg += "<text x=\"" + fmt_f(L + pw - 6, 1) + "\" y=\"" +
             fmt_f(T + 16 + 16 * double(si), 1) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
             "fill=\"" + color + "\">" + esc_xml(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string resolve_output_dir(const std::string& flag_value) {
  std::string dir = flag_value;
  if (dir.empty()) {
    const char* env = std::getenv("BEAMLAB_OUT");
    if (env && *env) dir = env;
  }
  if (dir.empty()) dir = "out";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), std::streamsize(content.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace lab
