#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "smgen/errors.hpp"
#include "smgen/eval.hpp"
#include "smgen/record.hpp"
#include "smgen/spectral.hpp"

namespace smgen {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("report: cannot open " + path + " for writing");
  return f;
}

// Fixed five-stop viridis-style colormap so heatmaps are reproducible.
inline std::string heat_color(double v) {
  static const double stops[5][3] = {{68, 1, 84},
                                     {59, 82, 139},
                                     {33, 145, 140},
                                     {94, 201, 98},
                                     {253, 231, 37}};
  v = std::clamp(v, 0.0, 1.0);
  const double x = v * 4.0;
  const int lo = std::min(3, static_cast<int>(x));
  const double t = x - lo;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[lo][0] +
                                             t * (stops[lo + 1][0] - stops[lo][0]))),
                static_cast<int>(std::lround(stops[lo][1] +
                                             t * (stops[lo + 1][1] - stops[lo][1]))),
                static_cast<int>(std::lround(stops[lo][2] +
                                             t * (stops[lo + 1][2] - stops[lo][2]))));
  return buf;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace detail

inline void write_matrix_csv(const SimilarityMatrix& m, const std::string& path) {
  auto f = detail::open_out(path);
  f << "label";
  for (const auto& l : m.labels) f << ',' << l;
  f << '\n';
  for (std::size_t i = 0; i < m.n(); ++i) {
    f << m.labels[i];
    for (std::size_t j = 0; j < m.n(); ++j) f << ',' << detail::fmt(m.at(i, j));
    f << '\n';
  }
}

inline SimilarityMatrix read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("report: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw DataError("report: empty matrix csv");
  SimilarityMatrix m;
  {
    std::size_t start = line.find(',');
    while (start != std::string::npos) {
      const std::size_t next = line.find(',', start + 1);
      m.labels.push_back(line.substr(start + 1, next == std::string::npos
                                                    ? std::string::npos
                                                    : next - start - 1));
      start = next;
    }
  }
  const std::size_t n = m.labels.size();
  m.values.reserve(n * n);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::size_t start = line.find(',');
    while (start != std::string::npos) {
      const std::size_t next = line.find(',', start + 1);
      m.values.push_back(std::strtod(line.c_str() + start + 1, nullptr));
      start = next;
    }
  }
  if (m.values.size() != n * n)
    throw DataError("report: matrix csv has wrong cell count");
  return m;
}

inline void write_curve_csv(const HVSRCurve& curve, const std::string& path) {
  auto f = detail::open_out(path);
  f << "freq_hz,ratio\n";
  for (std::size_t i = 0; i < curve.freqs.size(); ++i)
    f << detail::fmt(curve.freqs[i]) << ',' << detail::fmt(curve.ratio[i]) << '\n';
}

inline void write_distribution_csv(const std::vector<F0Distribution>& dists,
                                   const std::string& path) {
  auto f = detail::open_out(path);
  f << "station,kind,bin_lo_hz,bin_hi_hz,prob\n";
  for (const auto& d : dists)
    for (std::size_t b = 0; b + 1 < d.bin_edges.size(); ++b)
      f << d.station_id << ',' << kind_name(d.kind) << ','
        << detail::fmt(d.bin_edges[b]) << ',' << detail::fmt(d.bin_edges[b + 1])
        << ',' << detail::fmt(d.probs[b]) << '\n';
}

struct F0Row {
  std::string record;
  std::string station;
  F0Estimate est;
};

inline void write_f0_csv(const std::vector<F0Row>& rows, const std::string& path) {
  auto f = detail::open_out(path);
  f << "record,station,f0_hz,prominence\n";
  for (const auto& r : rows) {
    f << r.record << ',' << r.station << ',';
    if (r.est.f0)
      f << detail::fmt(*r.est.f0) << ',' << detail::fmt(r.est.prominence);
    else
      f << ',';  // no clear peak
    f << '\n';
  }
}

// Minimal SVG heatmap with row/column labels and cell shading.
inline void write_matrix_svg(const SimilarityMatrix& m, const std::string& title,
                             const std::string& path) {
  const std::size_t n = m.n();
  const int cell = 28, margin = 110, top = 48;
  const int width = margin + cell * static_cast<int>(n) + 20;
  const int height = top + cell * static_cast<int>(n) + margin;
  auto f = detail::open_out(path);
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << margin << "\" y=\"24\" font-size=\"15\" "
       "font-family=\"sans-serif\">" << title << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      f << "<rect x=\"" << margin + cell * static_cast<int>(j) << "\" y=\""
        << top + cell * static_cast<int>(i) << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\""
        << detail::heat_color(m.at(i, j)) << "\"/>\n";
    }
    f << "<text x=\"" << margin - 6 << "\" y=\""
      << top + cell * static_cast<int>(i) + cell / 2 + 4
      << "\" font-size=\"9\" text-anchor=\"end\" font-family=\"sans-serif\">"
      << m.labels[i] << "</text>\n";
    f << "<text x=\"" << margin + cell * static_cast<int>(i) + cell / 2
      << "\" y=\"" << top + cell * static_cast<int>(n) + 10
      << "\" font-size=\"9\" font-family=\"sans-serif\" "
         "transform=\"rotate(45 "
      << margin + cell * static_cast<int>(i) + cell / 2 << ' '
      << top + cell * static_cast<int>(n) + 10 << ")\">" << m.labels[i]
      << "</text>\n";
  }
  f << "</svg>\n";
}

// Log-x line plot for a set of HVSR curves.
inline void write_curves_svg(const std::vector<HVSRCurve>& curves,
                             const std::vector<std::string>& names,
                             const std::string& title, const std::string& path) {
  if (curves.empty()) throw DataError("write_curves_svg: no curves");
  const int width = 640, height = 400, ml = 60, mr = 20, mt = 40, mb = 50;
  double ymax = 0.0;
  for (const auto& c : curves)
    for (double r : c.ratio) ymax = std::max(ymax, r);
  ymax = std::max(ymax * 1.05, 1e-6);
  const double xlo = std::log(curves.front().freqs.front());
  const double xhi = std::log(curves.front().freqs.back());
  auto xpix = [&](double fhz) {
    return ml + (std::log(fhz) - xlo) / (xhi - xlo) * (width - ml - mr);
  };
  auto ypix = [&](double r) {
    return height - mb - r / ymax * (height - mt - mb);
  };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  auto f = detail::open_out(path);
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << ml << "\" y=\"22\" font-size=\"14\" "
       "font-family=\"sans-serif\">" << title << "</text>\n"
    << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
    << width - mr << "\" y2=\"" << height - mb
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
    << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  for (double tick : {1.0, 2.0, 5.0, 10.0, 20.0}) {
    if (tick < curves.front().freqs.front() - 1e-9 ||
        tick > curves.front().freqs.back() + 1e-9)
      continue;
    f << "<text x=\"" << xpix(tick) << "\" y=\"" << height - mb + 16
      << "\" font-size=\"10\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">" << detail::fmt_short(tick) << "</text>\n";
  }
  f << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
    << "\" font-size=\"11\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\">frequency (Hz)</text>\n";
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    f << "<polyline fill=\"none\" stroke=\"" << palette[ci % 6]
      << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.freqs.size(); ++i)
      f << detail::fmt_short(xpix(c.freqs[i])) << ','
        << detail::fmt_short(ypix(c.ratio[i])) << ' ';
    f << "\"/>\n";
    if (ci < names.size())
      f << "<text x=\"" << width - mr - 150 << "\" y=\""
        << mt + 14 * static_cast<int>(ci) << "\" font-size=\"10\" fill=\""
        << palette[ci % 6] << "\" font-family=\"sans-serif\">" << names[ci]
        << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace smgen
