#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "loadsim/csv.hpp"

namespace loadsim {

// Minimal standalone SVG emitter for line plots, scatters and heat maps.
// Data coordinates map linearly into a fixed-margin viewport; y grows upward.
class SvgPlot {
 public:
  SvgPlot(double x_min, double x_max, double y_min, double y_max, int width = 760,
          int height = 520)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), w_(width), h_(height) {
    if (x_max_ <= x_min_) x_max_ = x_min_ + 1.0;
    if (y_max_ <= y_min_) y_max_ = y_min_ + 1.0;
  }

  void title(const std::string& s) { title_ = s; }
  void x_label(const std::string& s) { x_label_ = s; }
  void y_label(const std::string& s) { y_label_ = s; }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double stroke_width = 1.5) {
    if (pts.empty()) return;
    std::string d = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                    fmt_g(stroke_width) + "\" points=\"";
    for (const auto& [x, y] : pts) {
      d += fmt_g(px(x));
      d += ',';
      d += fmt_g(py(y));
      d += ' ';
    }
    d += "\"/>";
    body_.push_back(std::move(d));
  }

  void circle(double x, double y, double r_px, const std::string& color,
              bool filled = true) {
    body_.push_back("<circle cx=\"" + fmt_g(px(x)) + "\" cy=\"" + fmt_g(py(y)) + "\" r=\"" +
                    fmt_g(r_px) + "\" " +
                    (filled ? "fill=\"" + color + "\""
                            : "fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"") +
                    "/>");
  }

  // Data-space rectangle with 0..1 intensity (used for histogram heat maps).
  void heat_cell(double x0, double x1, double y0, double y1, double intensity,
                 const std::string& color = "#b03030") {
    const double o = std::clamp(intensity, 0.0, 1.0);
    if (o <= 0.0) return;
    body_.push_back("<rect x=\"" + fmt_g(px(x0)) + "\" y=\"" + fmt_g(py(y1)) + "\" width=\"" +
                    fmt_g(px(x1) - px(x0)) + "\" height=\"" + fmt_g(py(y0) - py(y1)) +
                    "\" fill=\"" + color + "\" fill-opacity=\"" + fmt_g(o) + "\"/>");
  }

  void text(double x, double y, const std::string& s, int size_px = 11,
            const std::string& color = "#202020") {
    body_.push_back("<text x=\"" + fmt_g(px(x)) + "\" y=\"" + fmt_g(py(y)) + "\" font-size=\"" +
                    std::to_string(size_px) + "\" fill=\"" + color + "\">" + escape(s) +
                    "</text>");
  }

  std::string render() const {
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w_) +
         "\" height=\"" + std::to_string(h_) + "\" viewBox=\"0 0 " + std::to_string(w_) + " " +
         std::to_string(h_) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(w_) + "\" height=\"" +
         std::to_string(h_) + "\" fill=\"white\"/>\n";
    // axes frame
    s += "<rect x=\"" + fmt_g(margin_) + "\" y=\"" + fmt_g(top_margin()) + "\" width=\"" +
         fmt_g(w_ - margin_ - right_margin_) + "\" height=\"" +
         fmt_g(h_ - top_margin() - bottom_margin_) +
         "\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n";
    s += axis_labels();
    for (const auto& b : body_) {
      s += b;
      s += '\n';
    }
    s += "</svg>\n";
    return s;
  }

  void write(const std::filesystem::path& path) const { write_text_file(path, render()); }

 private:
  double top_margin() const { return title_.empty() ? 16.0 : 34.0; }

  double px(double x) const {
    return margin_ + (x - x_min_) / (x_max_ - x_min_) * (w_ - margin_ - right_margin_);
  }
  double py(double y) const {
    return h_ - bottom_margin_ -
           (y - y_min_) / (y_max_ - y_min_) * (h_ - top_margin() - bottom_margin_);
  }

  static std::string escape(const std::string& in) {
    std::string out;
    for (char c : in) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out += c;
    }
    return out;
  }

  std::string axis_labels() const {
    char buf[256];
    std::string s;
    if (!title_.empty()) {
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%g\" y=\"22\" font-size=\"14\" fill=\"#000\">%s</text>\n",
                    margin_, escape(title_).c_str());
      s += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"#000\">%s</text>\n",
                  0.5 * w_ - 40.0, h_ - 8.0, escape(x_label_).c_str());
    s += buf;
    std::snprintf(
        buf, sizeof(buf),
        "<text x=\"12\" y=\"%g\" font-size=\"12\" fill=\"#000\" transform=\"rotate(-90 12 %g)\">"
        "%s</text>\n",
        0.5 * h_, 0.5 * h_, escape(y_label_).c_str());
    s += buf;
    // corner coordinates for scale reading
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"#606060\">%g</text>\n",
                  margin_, h_ - bottom_margin_ + 14.0, x_min_);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"#606060\">%g</text>\n",
                  w_ - right_margin_ - 30.0, h_ - bottom_margin_ + 14.0, x_max_);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"#606060\">%g</text>\n",
                  margin_ - 34.0, h_ - bottom_margin_, y_min_);
    s += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"#606060\">%g</text>\n",
                  margin_ - 34.0, top_margin() + 10.0, y_max_);
    s += buf;
    return s;
  }

  double x_min_, x_max_, y_min_, y_max_;
  int w_, h_;
  double margin_ = 52.0;
  double right_margin_ = 16.0;
  double bottom_margin_ = 36.0;
  std::string title_, x_label_, y_label_;
  std::vector<std::string> body_;
};

}  // namespace loadsim
