#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace tsdm::cli {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string signature_svg(const std::vector<SignatureSeries>& series,
                          const std::vector<std::string>& axis_labels) {
  const double w = 720, h = 400, left = 60, right = 180, top = 20, bottom = 70;
  const double pw = w - left - right, ph = h - top - bottom;
  std::size_t d = axis_labels.size();
  double ymax = 0.0;
  for (const auto& s : series) {
    d = std::max(d, s.values.size());
    for (double v : s.values) ymax = std::max(ymax, v);
  }
  if (ymax <= 0.0) ymax = 1.0;
  auto xpos = [&](std::size_t i) { return left + (d > 1 ? pw * i / (d - 1) : pw / 2); };
  auto ypos = [&](double v) { return top + ph * (1.0 - v / ymax); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << num(ypos(v) + 4) << "\" text-anchor=\"end\">"
      << num(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < axis_labels.size(); ++i)
    o << "<text transform=\"translate(" << num(xpos(i)) << "," << top + ph + 12
      << ") rotate(45)\">" << escape(axis_labels[i]) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].values.size(); ++i)
      o << (i ? " " : "") << num(xpos(i)) << "," << num(ypos(series[s].values[i]));
    o << "\"/>\n";
    o << "<text x=\"" << left + pw + 12 << "\" y=\"" << top + 14 * (s + 1) << "\" fill=\"" << colour
      << "\">" << escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string confusion_svg(const ConfusionMatrix& cm) {
  const std::size_t k = cm.labels.size();
  const double cell = 40, left = 100, top = 100;
  const double w = left + cell * k + 20, h = top + cell * k + 20;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < k; ++i) {
    o << "<text x=\"" << left - 6 << "\" y=\"" << num(top + cell * i + cell / 2 + 4)
      << "\" text-anchor=\"end\">" << escape(cm.labels[i]) << "</text>\n";
    o << "<text transform=\"translate(" << num(left + cell * i + cell / 2) << "," << top - 6
      << ") rotate(-60)\">" << escape(cm.labels[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t row = 0;
    for (std::size_t c : cm.counts[i]) row += c;
    for (std::size_t j = 0; j < k; ++j) {
      const double f = row ? static_cast<double>(cm.counts[i][j]) / row : 0.0;
      const int shade = static_cast<int>(255 - 200 * f);
      o << "<rect x=\"" << left + cell * j << "\" y=\"" << top + cell * i << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << "," << shade
        << ",255)\" stroke=\"#999\"/>\n";
      o << "<text x=\"" << num(left + cell * j + cell / 2) << "\" y=\""
        << num(top + cell * i + cell / 2 + 4) << "\" text-anchor=\"middle\">" << cm.counts[i][j]
        << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace tsdm::cli
