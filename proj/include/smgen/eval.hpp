#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "smgen/errors.hpp"

namespace smgen {

inline constexpr std::size_t kF0Bins = 40;
inline constexpr double kF0BandLo = 1.0;
inline constexpr double kF0BandHi = 20.0;
inline constexpr double kHistSmoothing = 1e-6;

enum class SourceKind { Real, Generated, Reconstructed };

inline const char* kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::Real: return "real";
    case SourceKind::Generated: return "generated";
    default: return "reconstructed";
  }
}

inline std::vector<double> log_spaced_edges(double lo = kF0BandLo,
                                            double hi = kF0BandHi,
                                            std::size_t bins = kF0Bins) {
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo * std::pow(hi / lo, static_cast<double>(i) /
                                          static_cast<double>(bins));
  edges.front() = lo;
  edges.back() = hi;
  return edges;
}

// Bin index on the log-spaced grid; the top edge is inclusive.
inline std::size_t f0_bin_index(double f0, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  if (f0 <= edges.front()) return 0;
  if (f0 >= edges.back()) return bins - 1;
  const double t = std::log(f0 / edges.front()) /
                   std::log(edges.back() / edges.front());
  std::size_t idx = static_cast<std::size_t>(t * static_cast<double>(bins));
  if (idx >= bins) idx = bins - 1;
  // Guard against edge rounding.
  while (idx > 0 && f0 < edges[idx]) --idx;
  while (idx + 1 < bins && f0 >= edges[idx + 1]) ++idx;
  return idx;
}

struct F0Distribution {
  std::string station_id;
  SourceKind kind = SourceKind::Real;
  std::vector<double> bin_edges;
  std::vector<double> probs;
  std::size_t n_values = 0;  // picked values inside the band
};

// Histogram of picked f0 values over the log-spaced band. Additive
// smoothing keeps the support shared across distributions so JSD stays
// finite; smoothing = 0 gives the raw empirical histogram.
inline F0Distribution f0_distribution(const std::vector<double>& f0_values,
                                      std::size_t bins = kF0Bins,
                                      double smoothing = kHistSmoothing) {
  F0Distribution dist;
  dist.bin_edges = log_spaced_edges(kF0BandLo, kF0BandHi, bins);
  dist.probs.assign(bins, 0.0);
  std::size_t used = 0;
  for (double f0 : f0_values) {
    if (f0 < kF0BandLo || f0 > kF0BandHi) continue;
    dist.probs[f0_bin_index(f0, dist.bin_edges)] += 1.0;
    ++used;
  }
  if (used == 0)
    throw DataError("f0_distribution: no values inside the analysis band");
  dist.n_values = used;
  double total = 0.0;
  for (auto& p : dist.probs) {
    p += smoothing;
    total += p;
  }
  for (auto& p : dist.probs) p /= total;
  return dist;
}

// Jensen-Shannon divergence, base-2 logs so the value lies in [0, 1].
inline double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ShapeError("jsd: bin count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(acc, 0.0, 1.0);
}

inline double similarity(const F0Distribution& a, const F0Distribution& b) {
  return 1.0 - jsd(a.probs, b.probs);
}

struct SimilarityMatrix {
  std::vector<std::string> labels;  // "station/kind", station-major
  std::vector<double> values;      // n x n row-major

  std::size_t n() const { return labels.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * n() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n() + j]; }
};

inline const SourceKind kKindOrder[3] = {SourceKind::Real, SourceKind::Generated,
                                         SourceKind::Reconstructed};

// 15x15 confusion matrix over (station x {real, generated, reconstructed}).
// Entries above the diagonal are computed once and mirrored, so symmetry is
// exact; the diagonal is exactly 1 by the p == q identity.
inline SimilarityMatrix build_confusion(
    const std::vector<std::string>& station_ids,
    const std::vector<F0Distribution>& dists) {
  const std::size_t n = station_ids.size() * 3;
  auto find_dist = [&](const std::string& st, SourceKind kind)
      -> const F0Distribution* {
    for (const auto& d : dists)
      if (d.station_id == st && d.kind == kind) return &d;
    return nullptr;
  };
  SimilarityMatrix m;
  std::vector<const F0Distribution*> cells;
  for (const auto& st : station_ids) {
    for (const auto kind : kKindOrder) {
      const auto* d = find_dist(st, kind);
      if (!d)
        throw DataError("build_confusion: missing distribution for station '" +
                        st + "', kind '" + kind_name(kind) + "'");
      cells.push_back(d);
      m.labels.push_back(st + "/" + kind_name(kind));
    }
  }
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = similarity(*cells[i], *cells[j]);
      m.at(i, j) = s;
      m.at(j, i) = s;
    }
  }
  return m;
}

// Block-diagonal target: five 3x3 all-ones station blocks, zeros elsewhere.
inline SimilarityMatrix ideal_matrix(const std::vector<std::string>& station_ids) {
  SimilarityMatrix m;
  for (const auto& st : station_ids)
    for (const auto kind : kKindOrder)
      m.labels.push_back(st + "/" + kind_name(kind));
  const std::size_t n = m.labels.size();
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i / 3 == j / 3) m.at(i, j) = 1.0;
  return m;
}

// Zero-mean normalized cross-correlation of the flattened matrices; the
// non-centered variant is kept behind a flag.
inline double ncc_alignment(const SimilarityMatrix& m, const SimilarityMatrix& ideal,
                            bool zero_mean = true) {
  if (m.values.size() != ideal.values.size())
    throw ShapeError("ncc_alignment: matrix sizes differ");
  const double n = static_cast<double>(m.values.size());
  double ma = 0.0, ia = 0.0;
  if (zero_mean) {
    for (double v : m.values) ma += v;
    for (double v : ideal.values) ia += v;
    ma /= n;
    ia /= n;
  }
  double dot = 0.0, mm = 0.0, ii = 0.0;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double a = m.values[i] - ma;
    const double b = ideal.values[i] - ia;
    dot += a * b;
    mm += a * a;
    ii += b * b;
  }
  if (mm <= 0.0 || ii <= 0.0)
    throw DataError("ncc_alignment: zero-variance matrix");
  return dot / std::sqrt(mm * ii);
}

// Mean over the 5 diagonal 3x3 station blocks minus the mean over all
// off-block entries; the station-specificity margin used in reports.
inline double block_contrast(const SimilarityMatrix& m) {
  const std::size_t n = m.n();
  double diag = 0.0, off = 0.0;
  std::size_t nd = 0, no = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i / 3 == j / 3) {
        diag += m.at(i, j);
        ++nd;
      } else {
        off += m.at(i, j);
        ++no;
      }
    }
  return diag / static_cast<double>(nd) - off / static_cast<double>(no);
}

}  // namespace smgen
