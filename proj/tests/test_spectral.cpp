#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "smgen/eval.hpp"
#include "smgen/rng.hpp"
#include "smgen/spectral.hpp"
#include "smgen/synth.hpp"

using namespace smgen;

namespace {

AccelerationRecord record_from_channels(const std::vector<double>& h1,
                                        const std::vector<double>& h2,
                                        const std::vector<double>& v,
                                        double fs = 100.0) {
  AccelerationRecord rec;
  rec.fs = fs;
  rec.data.resize(h1.size() * kNumChannels);
  for (std::size_t t = 0; t < h1.size(); ++t) {
    rec.at(t, 0) = h1[t];
    rec.at(t, 1) = h2[t];
    rec.at(t, 2) = v[t];
  }
  return rec;
}

std::vector<double> random_signal(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace

TEST(AmplitudeSpectrum, BinCenteredCosine) {
  const std::size_t n = 1000;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = std::cos(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 100.0);
  const auto spec = amplitude_spectrum(x, 100.0);
  // 5 Hz is bin 50 on a 0.1 Hz grid.
  EXPECT_NEAR(spec.freqs[50], 5.0, 1e-12);
  EXPECT_NEAR(spec.amps[50], static_cast<double>(n) / 2.0, 1e-6);
  for (std::size_t k = 0; k < spec.amps.size(); ++k)
    if (k != 50) ASSERT_LT(spec.amps[k], 1e-6) << "bin " << k;
}

TEST(AmplitudeSpectrum, ZeroSignal) {
  const auto spec = amplitude_spectrum(std::vector<double>(64, 0.0), 100.0);
  for (double a : spec.amps) EXPECT_EQ(a, 0.0);
}

TEST(SmoothSpectrum, PreservesConstants) {
  AmplitudeSpectrum spec;
  for (int k = 0; k <= 100; ++k) {
    spec.freqs.push_back(0.1 * k);
    spec.amps.push_back(3.5);
  }
  const auto out = smooth_spectrum(spec, 0.1);
  for (double a : out.amps) ASSERT_NEAR(a, 3.5, 1e-12);
}

TEST(SmoothSpectrum, MatchesBruteForceWindowSum) {
  Rng rng(3);
  AmplitudeSpectrum spec;
  for (int k = 0; k <= 200; ++k) {
    spec.freqs.push_back(0.05 * k);
    spec.amps.push_back(std::abs(rng.normal()));
  }
  const double bw = 0.1;
  const auto out = smooth_spectrum(spec, bw);
  const double w = std::log1p(bw);
  for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
    if (!(spec.freqs[i] > 0.0)) {
      ASSERT_EQ(out.amps[i], spec.amps[i]);
      continue;
    }
    double sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < spec.freqs.size(); ++j) {
      if (!(spec.freqs[j] > 0.0)) continue;
      if (std::abs(std::log(spec.freqs[j]) - std::log(spec.freqs[i])) <= w) {
        sum += spec.amps[j];
        ++count;
      }
    }
    ASSERT_NEAR(out.amps[i], sum / count, 1e-12) << "bin " << i;
  }
}

TEST(SmoothSpectrum, TinyBandwidthIsIdentity) {
  Rng rng(4);
  AmplitudeSpectrum spec;
  for (int k = 0; k <= 300; ++k) {
    spec.freqs.push_back(0.05 * k);
    spec.amps.push_back(std::abs(rng.normal()));
  }
  const auto out = smooth_spectrum(spec, 1e-7);
  for (std::size_t i = 0; i < spec.amps.size(); ++i)
    ASSERT_EQ(out.amps[i], spec.amps[i]);
}

TEST(Hvsr, IdenticalChannelsGiveUnitRatio) {
  Rng rng(5);
  const auto x = random_signal(rng, 2000);
  const auto curve = hvsr(record_from_channels(x, x, x));
  ASSERT_FALSE(curve.freqs.empty());
  EXPECT_GE(curve.freqs.front(), 1.0 - 1e-9);
  EXPECT_LE(curve.freqs.back(), 20.0 + 1e-9);
  for (double r : curve.ratio) ASSERT_NEAR(r, 1.0, 1e-9);
}

TEST(Hvsr, ScaledHorizontalsGiveConstantRatio) {
  Rng rng(6);
  const auto x = random_signal(rng, 2000);
  std::vector<double> h(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) h[i] = 2.0 * x[i];
  const auto curve = hvsr(record_from_channels(h, h, x));
  for (double r : curve.ratio) ASSERT_NEAR(r, 2.0, 1e-9);
}

TEST(Hvsr, ZeroVerticalStaysFinite) {
  Rng rng(7);
  const auto x = random_signal(rng, 512);
  const auto curve = hvsr(record_from_channels(x, x, std::vector<double>(512, 0.0)));
  for (double r : curve.ratio) {
    ASSERT_TRUE(std::isfinite(r));
    ASSERT_GT(r, 0.0);
  }
}

TEST(Hvsr, InvariantUnderUniformScaling) {
  Rng rng(8);
  const auto h1 = random_signal(rng, 1024);
  const auto h2 = random_signal(rng, 1024);
  const auto v = random_signal(rng, 1024);
  const auto base = hvsr(record_from_channels(h1, h2, v));
  auto scale = [](const std::vector<double>& x, double s) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
    return out;
  };
  const auto scaled =
      hvsr(record_from_channels(scale(h1, 37.5), scale(h2, 37.5), scale(v, 37.5)));
  for (std::size_t i = 0; i < base.ratio.size(); ++i)
    ASSERT_NEAR(scaled.ratio[i], base.ratio[i], 1e-9 * std::abs(base.ratio[i]));
}

// The production path must agree with a plain per-frequency scalar loop.
TEST(Hvsr, MatchesScalarReference) {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 40;
    AmplitudeSpectrum h1, h2, v;
    for (std::size_t k = 0; k < n; ++k) {
      const double f = 0.6 + 0.55 * static_cast<double>(k);
      h1.freqs.push_back(f);
      h2.freqs.push_back(f);
      v.freqs.push_back(f);
      h1.amps.push_back(std::abs(rng.normal()) + 1e-3);
      h2.amps.push_back(std::abs(rng.normal()) + 1e-3);
      v.amps.push_back(std::abs(rng.normal()) + 1e-3);
    }
    const auto curve = hvsr_from_spectra(h1, h2, v, 1.0, 20.0);
    double vmax = 0.0;
    for (double a : v.amps) vmax = std::max(vmax, a);
    const double eps_v = 1e-12 * vmax;
    std::size_t ci = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (v.freqs[k] < 1.0 - 1e-12 || v.freqs[k] > 20.0 + 1e-12) continue;
      const double h =
          std::sqrt((h1.amps[k] * h1.amps[k] + h2.amps[k] * h2.amps[k]) / 2.0);
      const double want = h / std::max(v.amps[k], eps_v);
      ASSERT_NEAR(curve.ratio[ci], want, 1e-12 * std::abs(want));
      ++ci;
    }
    ASSERT_EQ(ci, curve.ratio.size());
  }
}

namespace {

HVSRCurve make_curve(const std::vector<double>& ratio, double f_lo = 1.0,
                     double f_step = 0.5) {
  HVSRCurve c;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    c.freqs.push_back(f_lo + f_step * static_cast<double>(i));
    c.ratio.push_back(ratio[i]);
  }
  return c;
}

}  // namespace

TEST(PickF0, FindsSinglePeak) {
  // Peak of ratio 4 at 5 Hz on a baseline of 1.
  std::vector<double> r(39, 1.0);
  r[8] = 4.0;  // 1.0 + 0.5*8 = 5 Hz
  const auto est = pick_f0(make_curve(r), 1.0, 2.0);
  ASSERT_TRUE(est.f0.has_value());
  EXPECT_DOUBLE_EQ(*est.f0, 5.0);
  EXPECT_DOUBLE_EQ(est.peak_ratio, 4.0);
  EXPECT_DOUBLE_EQ(est.prominence, 3.0);
}

TEST(PickF0, PrefersLowestQualifyingPeak) {
  std::vector<double> r(39, 1.0);
  r[2] = 3.5;   // 2 Hz, prominence 2.5
  r[14] = 7.0;  // 8 Hz, prominence 6
  const auto est = pick_f0(make_curve(r), 2.0, 2.0);
  ASSERT_TRUE(est.f0.has_value());
  EXPECT_DOUBLE_EQ(*est.f0, 2.0);
}

TEST(PickF0, FlatCurveHasNoPeak) {
  const auto est = pick_f0(make_curve(std::vector<double>(39, 1.0)));
  EXPECT_FALSE(est.f0.has_value());
}

TEST(PickF0, SkipsLowProminenceAndLowRatio) {
  std::vector<double> r(39, 1.0);
  r[4] = 1.8;  // below ratio_min = 2
  auto est = pick_f0(make_curve(r), 0.5, 2.0);
  EXPECT_FALSE(est.f0.has_value());
  r[4] = 2.5;  // prominence 1.5 below prominence_min = 2
  est = pick_f0(make_curve(r), 2.0, 2.0);
  EXPECT_FALSE(est.f0.has_value());
}

TEST(PickF0, StableAcrossGridResolution) {
  // Same underlying bump sampled at two resolutions picks the same f0 up to
  // one histogram bin.
  auto bump = [](double f) {
    return 1.0 + 5.0 * std::exp(-0.5 * std::pow((f - 4.0) / 0.4, 2.0));
  };
  const auto edges = log_spaced_edges();
  for (const double step : {0.31, 0.07}) {
    HVSRCurve c;
    for (double f = 1.0; f <= 20.0; f += step) {
      c.freqs.push_back(f);
      c.ratio.push_back(bump(f));
    }
    const auto est = pick_f0(c);
    ASSERT_TRUE(est.f0.has_value());
    const auto bin = f0_bin_index(*est.f0, edges);
    const auto want = f0_bin_index(4.0, edges);
    ASSERT_LE(bin > want ? bin - want : want - bin, 1u) << "step " << step;
  }
}

TEST(AverageHvsr, SingleCurveIsIdentity) {
  const auto c = make_curve({1.0, 2.0, 3.0});
  const auto avg = average_hvsr({c});
  for (std::size_t i = 0; i < c.ratio.size(); ++i)
    EXPECT_NEAR(avg.ratio[i], c.ratio[i], 1e-12);
}

TEST(AverageHvsr, GeometricMeanOfTwo) {
  const auto a = make_curve({1.0, 1.0});
  const auto b = make_curve({4.0, 4.0});
  const auto avg = average_hvsr({a, b});
  for (double r : avg.ratio) EXPECT_NEAR(r, 2.0, 1e-12);
}

TEST(AverageHvsr, MedianMode) {
  const auto a = make_curve({1.0});
  const auto b = make_curve({10.0});
  const auto c = make_curve({2.0});
  const auto med = average_hvsr({a, b, c}, HvsrAverage::Median);
  EXPECT_DOUBLE_EQ(med.ratio[0], 2.0);
}

TEST(AverageHvsr, GridMismatchThrows) {
  const auto a = make_curve({1.0, 2.0});
  auto b = make_curve({1.0, 2.0});
  b.freqs[1] += 0.25;
  EXPECT_THROW(average_hvsr({a, b}), ShapeError);
}

// SDOF oracle: the synthetic generator's resonance is recovered by pick_f0.
TEST(SynthOracle, PickedF0MatchesProfile) {
  const auto edges = log_spaced_edges();
  for (const double f0 : {2.6, 6.4}) {
    const StationProfile profile{"S", f0, 0.05, 1.0, 0.05};
    int hits = 0;
    const int trials = 25;
    for (int seed = 0; seed < trials; ++seed) {
      const auto rec = synth_station_record(profile, 20.0, 100.0, 1000 + seed);
      const auto est = pick_f0(hvsr(rec));
      if (!est.f0) continue;
      const auto bin = f0_bin_index(*est.f0, edges);
      const auto want = f0_bin_index(f0, edges);
      if ((bin > want ? bin - want : want - bin) <= 1) ++hits;
    }
    EXPECT_GE(hits, trials - 1) << "f0 " << f0;
  }
}

TEST(SynthOracle, NoResonanceMeansNoClearPeak) {
  const StationProfile profile{"S", 5.0, 0.05, 0.0, 0.05};  // amp_gain = 0
  int no_peak = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto rec = synth_station_record(profile, 20.0, 100.0, 77 + seed);
    if (!pick_f0(hvsr(rec)).f0) ++no_peak;
  }
  EXPECT_GE(no_peak, 8);
}

TEST(SynthOracle, ProfilesArePairwiseSeparated) {
  const auto edges = log_spaced_edges();
  const auto profiles = default_station_profiles();
  for (std::size_t a = 0; a < profiles.size(); ++a)
    for (std::size_t b = a + 1; b < profiles.size(); ++b) {
      const auto ba = f0_bin_index(profiles[a].f0_hz, edges);
      const auto bb = f0_bin_index(profiles[b].f0_hz, edges);
      EXPECT_GT(ba > bb ? ba - bb : bb - ba, 1u)
          << profiles[a].station_id << " vs " << profiles[b].station_id;
    }
}
