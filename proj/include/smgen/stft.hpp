#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "smgen/fft.hpp"
#include "smgen/record.hpp"

namespace smgen {

inline constexpr double kDbFloor = 1e-10;  // -200 dB silence floor

struct StftParams {
  std::size_t window_len = 256;
  std::size_t hop = 64;  // 75% overlap with the periodic cosine taper

  std::size_t bins() const { return window_len / 2 + 1; }
  std::size_t frame_count(std::size_t n) const {
    if (n < window_len) throw ShapeError("stft: series shorter than window");
    return (n - window_len) / hop + 1;
  }
};

struct ComplexFrames {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> v;  // frames x bins row-major

  std::complex<double>& at(std::size_t f, std::size_t b) { return v[f * bins + b]; }
  std::complex<double> at(std::size_t f, std::size_t b) const { return v[f * bins + b]; }
};

// 6-plane time-frequency tensor: planes 0-2 amplitude (dB) per channel,
// planes 3-5 unwrapped phase (rad) per channel, each min-max scaled to
// [0, 1] with the bounds kept for inversion. Plane-major layout so the
// tensor doubles as a C=6 channel-first image.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t source_len = 0;  // record length the planes were computed from
  double fs = 100.0;
  std::string station_id;
  std::string event_id;
  std::array<std::pair<double, double>, 6> bounds{};
  std::vector<double> v;  // 6 * frames * bins

  double& at(std::size_t plane, std::size_t f, std::size_t b) {
    return v[(plane * frames + f) * bins + b];
  }
  double at(std::size_t plane, std::size_t f, std::size_t b) const {
    return v[(plane * frames + f) * bins + b];
  }
};

namespace detail {

// Periodic Hamming-class cosine taper. The nonzero edge value matters: with
// a window that vanishes at its first sample, the outermost signal samples
// are unrecoverable by any overlap-add inverse, and the full-record round
// trip could never meet its tolerance.
inline std::vector<double> cosine_taper_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t)
    w[t] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) /
                                  static_cast<double>(n));
  return w;
}

}  // namespace detail

// Frame f covers samples [f*hop, f*hop + window_len); tapered one-sided DFT.
inline ComplexFrames stft_forward(const std::vector<double>& series,
                                  const StftParams& p) {
  const std::size_t frames = p.frame_count(series.size());
  const auto window = detail::cosine_taper_window(p.window_len);
  ComplexFrames out;
  out.frames = frames;
  out.bins = p.bins();
  out.v.resize(frames * out.bins);
  std::vector<double> seg(p.window_len);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t t = 0; t < p.window_len; ++t)
      seg[t] = series[f * p.hop + t] * window[t];
    const auto spec = fft::rfft(seg);
    for (std::size_t b = 0; b < out.bins; ++b) out.at(f, b) = spec[b];
  }
  return out;
}

inline double to_db(double amp) {
  return 20.0 * std::log10(std::max(amp, kDbFloor));
}

inline double from_db(double db) { return std::pow(10.0, db / 20.0); }

// Map into (-pi, pi]. std::remainder is exactly rounded, so this is the
// cheapest faithful mod-2pi available.
inline double wrap_phase(double x) {
  double r = std::remainder(x, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

// Per frequency bin, along the frame axis: add 2*pi*k so consecutive
// differences land in (-pi, pi]; the first frame is passed through. Bins
// with k == 0 keep their input bits.
inline std::vector<double> unwrap_phase(const std::vector<double>& phase,
                                        std::size_t frames, std::size_t bins) {
  if (phase.size() != frames * bins)
    throw ShapeError("unwrap_phase: size mismatch");
  std::vector<double> out(phase.size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t b = 0; b < bins; ++b) {
    long long k = 0;
    out[b] = phase[b];
    for (std::size_t f = 1; f < frames; ++f) {
      const double prev = phase[(f - 1) * bins + b];
      const double cur = phase[f * bins + b];
      double d = cur - prev;
      while (d > std::numbers::pi) {
        d -= two_pi;
        --k;
      }
      while (d <= -std::numbers::pi) {
        d += two_pi;
        ++k;
      }
      out[f * bins + b] =
          k == 0 ? cur : cur + two_pi * static_cast<double>(k);
    }
  }
  return out;
}

// Undo dB, rebuild complex frames from (re-wrapped) phase, overlap-add with
// window-square normalization, trim/pad to target_len. Samples whose window
// stack is numerically empty (the outermost taper edges) come back as 0; a
// vanishing denominator at interior samples means the window/hop pair is
// not reconstruction-valid and is rejected.
inline std::vector<double> istft(const std::vector<double>& amp_db,
                                 const std::vector<double>& phase,
                                 const StftParams& p, std::size_t frames,
                                 std::size_t target_len) {
  const std::size_t bins = p.bins();
  if (amp_db.size() != frames * bins || phase.size() != frames * bins)
    throw ShapeError("istft: plane size mismatch");
  const auto window = detail::cosine_taper_window(p.window_len);
  const std::size_t coverage = (frames - 1) * p.hop + p.window_len;
  std::vector<double> num(coverage, 0.0), den(coverage, 0.0);
  std::vector<std::complex<double>> spec(bins);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double a = from_db(amp_db[f * bins + b]);
      const double ph = phase[f * bins + b];
      spec[b] = std::complex<double>(a * std::cos(ph), a * std::sin(ph));
    }
    const auto seg = fft::irfft(spec, p.window_len);
    for (std::size_t t = 0; t < p.window_len; ++t) {
      num[f * p.hop + t] += window[t] * seg[t];
      den[f * p.hop + t] += window[t] * window[t];
    }
  }
  const double den_tol = 1e-9;
  if (coverage >= 2 * p.window_len) {
    for (std::size_t t = p.window_len; t < coverage - p.window_len; ++t)
      if (den[t] < den_tol)
        throw ConfigError("istft: overlap-add denominator vanishes at interior "
                          "sample " + std::to_string(t) +
                          " (window/hop pair is not reconstruction-valid)");
  }
  std::vector<double> out(target_len, 0.0);
  const std::size_t upto = std::min(target_len, coverage);
  for (std::size_t t = 0; t < upto; ++t)
    out[t] = den[t] < den_tol ? 0.0 : num[t] / den[t];
  return out;
}

namespace detail {

inline void normalize_plane(Spectrogram& spec, std::size_t plane) {
  const std::size_t n = spec.frames * spec.bins;
  double lo = spec.v[plane * n];
  double hi = lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = spec.v[plane * n + i];
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  spec.bounds[plane] = {lo, hi};
  const double range = hi - lo;
  for (std::size_t i = 0; i < n; ++i) {
    double& x = spec.v[plane * n + i];
    x = range > 0.0 ? (x - lo) / range : 0.5;  // degenerate plane rule
  }
}

}  // namespace detail

// Forward half of the spectrogram pipeline. The record is expected in
// standardized form; the caller keeps the NormalizationStats for inversion.
inline Spectrogram record_to_tensor(const AccelerationRecord& rec,
                                    const StftParams& p) {
  const std::size_t frames = p.frame_count(rec.length());
  if (frames < 2) throw ShapeError("record_to_tensor: need at least 2 frames");
  Spectrogram spec;
  spec.frames = frames;
  spec.bins = p.bins();
  spec.source_len = rec.length();
  spec.fs = rec.fs;
  spec.station_id = rec.station_id;
  spec.event_id = rec.event_id;
  spec.v.resize(6 * frames * spec.bins);
  std::vector<double> phase(frames * spec.bins);
  for (int c = 0; c < kNumChannels; ++c) {
    const auto cf = stft_forward(rec.channel(c), p);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < spec.bins; ++b) {
        const auto z = cf.at(f, b);
        spec.at(c, f, b) = to_db(std::abs(z));
        phase[f * spec.bins + b] = std::atan2(z.imag(), z.real());
      }
    const auto unwrapped = unwrap_phase(phase, frames, spec.bins);
    for (std::size_t f = 0; f < frames; ++f)
      for (std::size_t b = 0; b < spec.bins; ++b)
        spec.at(3 + c, f, b) = unwrapped[f * spec.bins + b];
  }
  for (std::size_t plane = 0; plane < 6; ++plane)
    detail::normalize_plane(spec, plane);
  return spec;
}

inline AccelerationRecord tensor_to_record(const Spectrogram& spec,
                                           const StftParams& p,
                                           const NormalizationStats& stats) {
  const std::size_t n = spec.frames * spec.bins;
  AccelerationRecord rec;
  rec.station_id = spec.station_id;
  rec.event_id = spec.event_id;
  rec.fs = spec.fs;
  rec.data.assign(spec.source_len * kNumChannels, 0.0);
  std::vector<double> amp_db(n), phase(n);
  for (int c = 0; c < kNumChannels; ++c) {
    const auto [alo, ahi] = spec.bounds[c];
    const auto [plo, phi] = spec.bounds[3 + c];
    for (std::size_t i = 0; i < n; ++i) {
      amp_db[i] = alo + spec.v[c * n + i] * (ahi - alo);
      phase[i] = plo + spec.v[(3 + c) * n + i] * (phi - plo);
    }
    const auto series = istft(amp_db, phase, p, spec.frames, spec.source_len);
    for (std::size_t t = 0; t < spec.source_len; ++t)
      rec.at(t, c) = series[t];
  }
  return destandardize(rec, stats);
}

}  // namespace smgen
