#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "smgen/fft.hpp"
#include "smgen/record.hpp"

namespace smgen {

struct AmplitudeSpectrum {
  std::vector<double> freqs;  // Hz, strictly increasing
  std::vector<double> amps;   // same length, >= 0
};

struct HVSRCurve {
  std::vector<double> freqs;
  std::vector<double> ratio;
};

struct F0Estimate {
  std::optional<double> f0;  // Hz; empty when no clear peak qualifies
  double peak_ratio = 0.0;
  double prominence = 0.0;
};

struct HvsrParams {
  double band_lo_hz = 1.0;
  double band_hi_hz = 20.0;
  double bandwidth_frac = 0.10;  // log-frequency boxcar half-width ln(1+frac)
  bool taper = false;            // optional 5% cosine taper before the FFT
  double prominence_min = 1.0;
  double ratio_min = 2.0;
};

// One-sided DFT magnitudes, unnormalized (a unit-amplitude bin-centered
// cosine shows up with magnitude T/2). freqs[k] = k*fs/T.
inline AmplitudeSpectrum amplitude_spectrum(const std::vector<double>& samples,
                                            double fs) {
  const std::size_t n = samples.size();
  if (n < 2) throw ShapeError("amplitude_spectrum: need at least 2 samples");
  const auto spec = fft::rfft(samples);
  AmplitudeSpectrum out;
  out.freqs.resize(spec.size());
  out.amps.resize(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    out.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    out.amps[k] = std::abs(spec[k]);
  }
  return out;
}

// Log-frequency boxcar: each bin becomes the mean of bins whose frequency
// lies within |ln f_j - ln f_i| <= ln(1+bandwidth_frac). Nonpositive
// frequencies (the DC bin) pass through untouched.
inline AmplitudeSpectrum smooth_spectrum(const AmplitudeSpectrum& spec,
                                         double bandwidth_frac) {
  if (!(bandwidth_frac > 0.0))
    throw ConfigError("smooth_spectrum: bandwidth_frac must be positive");
  const std::size_t n = spec.freqs.size();
  AmplitudeSpectrum out;
  out.freqs = spec.freqs;
  out.amps.resize(n);
  const double w = std::log1p(bandwidth_frac);
  std::size_t first_pos = 0;
  while (first_pos < n && !(spec.freqs[first_pos] > 0.0)) {
    out.amps[first_pos] = spec.amps[first_pos];
    ++first_pos;
  }
  // Frequencies increase, so the window is contiguous; the inclusion test
  // is |ln f_j - ln f_i| <= w evaluated literally to keep boundary ties
  // identical to a direct summation.
  for (std::size_t i = first_pos; i < n; ++i) {
    const double center = std::log(spec.freqs[i]);
    double sum = spec.amps[i];
    std::size_t count = 1;
    for (std::size_t j = i; j-- > first_pos;) {
      if (!(std::abs(std::log(spec.freqs[j]) - center) <= w)) break;
      sum += spec.amps[j];
      ++count;
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(std::abs(std::log(spec.freqs[j]) - center) <= w)) break;
      sum += spec.amps[j];
      ++count;
    }
    out.amps[i] = sum / static_cast<double>(count);
  }
  return out;
}

namespace detail {

inline std::vector<double> cosine_taper(const std::vector<double>& x,
                                        double frac) {
  const std::size_t n = x.size();
  const std::size_t m = static_cast<std::size_t>(frac * static_cast<double>(n));
  std::vector<double> out = x;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi *
                                           static_cast<double>(i) /
                                           static_cast<double>(m)));
    out[i] *= w;
    out[n - 1 - i] *= w;
  }
  return out;
}

}  // namespace detail

// Combine already-smoothed horizontal and vertical spectra into the ratio
// curve restricted to [band_lo, band_hi]. The eps guard keeps the division
// total: eps_v = 1e-12 * max|V| (absolute 1e-20 when V is identically 0).
inline HVSRCurve hvsr_from_spectra(const AmplitudeSpectrum& h1,
                                   const AmplitudeSpectrum& h2,
                                   const AmplitudeSpectrum& v,
                                   double band_lo_hz, double band_hi_hz) {
  const std::size_t n = v.freqs.size();
  if (h1.freqs.size() != n || h2.freqs.size() != n)
    throw ShapeError("hvsr_from_spectra: spectra grids differ");
  double vmax = 0.0;
  for (double a : v.amps) vmax = std::max(vmax, a);
  const double eps_v = vmax > 0.0 ? 1e-12 * vmax : 1e-20;
  HVSRCurve curve;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = v.freqs[k];
    if (f < band_lo_hz - 1e-12 || f > band_hi_hz + 1e-12) continue;
    const double h = std::sqrt(
        (h1.amps[k] * h1.amps[k] + h2.amps[k] * h2.amps[k]) / 2.0);
    curve.freqs.push_back(f);
    curve.ratio.push_back(h / std::max(v.amps[k], eps_v));
  }
  return curve;
}

inline HVSRCurve hvsr(const AccelerationRecord& rec,
                      const HvsrParams& params = {}) {
  if (rec.length() < 2) throw ShapeError("hvsr: record too short");
  AmplitudeSpectrum spectra[kNumChannels];
  for (int c = 0; c < kNumChannels; ++c) {
    auto samples = rec.channel(c);
    if (params.taper) samples = detail::cosine_taper(samples, 0.05);
    spectra[c] =
        smooth_spectrum(amplitude_spectrum(samples, rec.fs), params.bandwidth_frac);
  }
  return hvsr_from_spectra(spectra[0], spectra[1], spectra[2],
                           params.band_lo_hz, params.band_hi_hz);
}

namespace detail {

// Prominence of a local maximum: height above the higher of the two base
// levels, where each base is the minimum between the peak and the nearest
// strictly higher sample (or the curve end) on that side.
inline double peak_prominence(const std::vector<double>& y, std::size_t peak) {
  const double h = y[peak];
  double left_base = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (y[i] > h) break;
    left_base = std::min(left_base, y[i]);
  }
  double right_base = h;
  for (std::size_t i = peak + 1; i < y.size(); ++i) {
    if (y[i] > h) break;
    right_base = std::min(right_base, y[i]);
  }
  return h - std::max(left_base, right_base);
}

}  // namespace detail

// Lowest-frequency local maximum that clears both the prominence and the
// absolute ratio thresholds; plateaus count once at their first sample.
inline F0Estimate pick_f0(const HVSRCurve& curve, double prominence_min = 1.0,
                          double ratio_min = 2.0) {
  if (curve.freqs.empty()) throw ShapeError("pick_f0: empty curve");
  const auto& y = curve.ratio;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;  // plateau
    if (j + 1 >= n || !(y[i] > y[j + 1])) continue;
    if (y[i] < ratio_min) continue;
    const double prom = detail::peak_prominence(y, i);
    if (prom < prominence_min) continue;
    F0Estimate est;
    est.f0 = curve.freqs[i];
    est.peak_ratio = y[i];
    est.prominence = prom;
    return est;
  }
  return {};
}

enum class HvsrAverage { GeometricMean, Median };

// Pointwise geometric mean (default) or median of curves on one shared grid.
inline HVSRCurve average_hvsr(const std::vector<HVSRCurve>& curves,
                              HvsrAverage mode = HvsrAverage::GeometricMean) {
  if (curves.empty()) throw ShapeError("average_hvsr: empty curve list");
  const auto& grid = curves.front().freqs;
  for (const auto& c : curves)
    if (c.freqs != grid)
      throw ShapeError("average_hvsr: frequency grids differ");
  HVSRCurve out;
  out.freqs = grid;
  out.ratio.resize(grid.size());
  if (mode == HvsrAverage::GeometricMean) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double acc = 0.0;
      for (const auto& c : curves) acc += std::log(c.ratio[k]);
      out.ratio[k] = std::exp(acc / static_cast<double>(curves.size()));
    }
  } else {
    std::vector<double> vals(curves.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (std::size_t i = 0; i < curves.size(); ++i) vals[i] = curves[i].ratio[k];
      std::sort(vals.begin(), vals.end());
      const std::size_t m = vals.size() / 2;
      out.ratio[k] = vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
    }
  }
  return out;
}

}  // namespace smgen
