#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "smgen/fft.hpp"
#include "smgen/record.hpp"
#include "smgen/rng.hpp"

namespace smgen {

// Synthetic station: horizontals carry a single-degree-of-freedom resonance
// at f0_hz so the fundamental frequency of every generated record is known
// analytically and can serve as a ground-truth oracle.
struct StationProfile {
  std::string station_id;
  double f0_hz = 5.0;
  double damping = 0.05;     // SDOF damping ratio
  double amp_gain = 1.0;     // resonant horizontal gain
  double floor_gain = 0.05;  // broadband horizontal floor
};

namespace detail {

// |H(f)| of an SDOF oscillator; peak sits at f0*sqrt(1-2*z^2), within 0.3%
// of f0 for the damping range used here.
inline double sdof_gain(double f, double f0, double zeta) {
  const double r = f / f0;
  const double a = 1.0 - r * r;
  const double b = 2.0 * zeta * r;
  return 1.0 / std::sqrt(a * a + b * b);
}

// Saragoni-Hart style attack-decay window, peak 1 at t_peak.
inline double envelope(double t, double t_peak) {
  if (t <= 0.0) return 0.0;
  const double x = t / t_peak;
  return x * x * std::exp(2.0 * (1.0 - x));
}

inline std::vector<double> band_limited_noise(std::size_t n, double fs,
                                              double f_lo, double f_hi,
                                              Rng& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  auto spec = fft::rfft(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    if (f < f_lo || f > f_hi) spec[k] = 0.0;
  }
  return fft::irfft(spec, n);
}

inline std::vector<double> apply_sdof(const std::vector<double>& x, double fs,
                                      double f0, double zeta) {
  const std::size_t n = x.size();
  auto spec = fft::rfft(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    spec[k] *= sdof_gain(f, f0, zeta);
  }
  return fft::irfft(spec, n);
}

}  // namespace detail

// The three channels share one incident wavefield, as HVSR assumes: the
// vertical carries it directly, the horizontals carry it (plus a small
// channel-specific component) through the SDOF site resonance. The shared
// base keeps single-record H/V curves close to the resonator response, so
// the analytic f0 is recoverable from one record.
inline AccelerationRecord synth_station_record(const StationProfile& profile,
                                               double duration_s, double fs,
                                               std::uint64_t seed) {
  if (!(profile.f0_hz > 0.0) || profile.f0_hz >= fs / 2.0)
    throw ConfigError("synth_station_record: f0 must lie in (0, fs/2), got " +
                      std::to_string(profile.f0_hz));
  if (!(duration_s > 0.0))
    throw ConfigError("synth_station_record: duration must be positive");

  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  if (n < 2) throw ConfigError("synth_station_record: record too short");

  Rng rng(seed);
  const double f_lo = 0.5;
  const double f_hi = std::min(0.45 * fs, 45.0);
  const double t_peak = 0.25 * duration_s;
  const double base_amp = 25.0;   // nominal cm/s^2 scale
  const double cross_mix = 0.3;   // channel-specific wavefield fraction
  const double common_mix = std::sqrt(1.0 - cross_mix * cross_mix);

  const auto wavefield = detail::band_limited_noise(n, fs, f_lo, f_hi, rng);

  AccelerationRecord rec;
  rec.station_id = profile.station_id;
  rec.fs = fs;
  rec.data.assign(n * kNumChannels, 0.0);

  for (int c = 0; c < 2; ++c) {
    const auto own = detail::band_limited_noise(n, fs, f_lo, f_hi, rng);
    const auto floor_noise = detail::band_limited_noise(n, fs, f_lo, f_hi, rng);
    std::vector<double> mix(n);
    for (std::size_t t = 0; t < n; ++t)
      mix[t] = common_mix * wavefield[t] + cross_mix * own[t];
    const auto resonant = detail::apply_sdof(mix, fs, profile.f0_hz, profile.damping);
    for (std::size_t t = 0; t < n; ++t) {
      const double e =
          detail::envelope(static_cast<double>(t) / fs, t_peak) * base_amp;
      rec.at(t, c) = e * (profile.amp_gain * resonant[t] +
                          profile.floor_gain * floor_noise[t]);
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double e =
        detail::envelope(static_cast<double>(t) / fs, t_peak) * base_amp;
    rec.at(t, 2) = e * wavefield[t];
  }
  return rec;
}

// Five-station analogue with distinct fundamental frequencies and record
// counts in the proportions used throughout the evaluation suite.
inline std::vector<StationProfile> default_station_profiles() {
  return {
      {"ST2020", 5.1, 0.05, 1.0, 0.05},
      {"ST4628", 1.8, 0.05, 1.0, 0.05},
      {"ST0205", 2.6, 0.05, 1.0, 0.05},
      {"ST1716", 6.4, 0.05, 1.0, 0.05},
      {"ST3130", 12.8, 0.05, 1.0, 0.05},
  };
}

inline std::vector<std::size_t> default_station_counts() {
  return {71, 38, 98, 110, 31};
}

}  // namespace smgen
