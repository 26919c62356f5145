#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "smgen/record.hpp"
#include "smgen/rng.hpp"
#include "smgen/synth.hpp"

using namespace smgen;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "smgen_record_tests";
  fs::create_directories(dir);
  return dir;
}

AccelerationRecord random_record(Rng& rng, std::size_t n) {
  AccelerationRecord rec;
  rec.station_id = "ST01";
  rec.event_id = "ev";
  rec.fs = 100.0;
  rec.data.resize(n * kNumChannels);
  for (auto& v : rec.data) v = rng.normal() * std::pow(10.0, rng.uniform() * 6 - 3);
  return rec;
}

}  // namespace

TEST(RecordIo, LoadsZeroRecord) {
  const auto path = temp_dir() / "zero.rec";
  {
    std::ofstream f(path);
    f << "station=A\nevent=e1\nfs=100\nn=4\n\n";
    for (int i = 0; i < 4; ++i) f << "0 0 0\n";
  }
  const auto rec = load_record(path.string());
  EXPECT_EQ(rec.length(), 4u);
  EXPECT_EQ(rec.station_id, "A");
  EXPECT_DOUBLE_EQ(rec.fs, 100.0);
  for (double v : rec.data) EXPECT_EQ(v, 0.0);
}

TEST(RecordIo, RejectsMissingColumn) {
  const auto path = temp_dir() / "twocol.rec";
  {
    std::ofstream f(path);
    f << "station=A\nevent=e1\nfs=100\nn=2\n\n";
    f << "1 2 3\n";
    f << "1 2\n";
  }
  EXPECT_THROW(load_record(path.string()), DataError);
}

TEST(RecordIo, RejectsNonFiniteSample) {
  const auto path = temp_dir() / "nonfinite.rec";
  {
    std::ofstream f(path);
    f << "station=A\nevent=e1\nfs=100\nn=1\n\n";
    f << "1 nan 3\n";
  }
  EXPECT_THROW(load_record(path.string()), DataError);
}

TEST(RecordIo, RoundTripIsBitExact) {
  Rng rng(42);
  const auto path = temp_dir() / "roundtrip.rec";
  for (int rep = 0; rep < 100; ++rep) {
    const auto rec = random_record(rng, 1 + rep % 50);
    save_record(rec, path.string());
    const auto back = load_record(path.string());
    ASSERT_EQ(back.data.size(), rec.data.size());
    for (std::size_t i = 0; i < rec.data.size(); ++i)
      ASSERT_EQ(back.data[i], rec.data[i]) << "rep " << rep << " sample " << i;
    ASSERT_EQ(back.station_id, rec.station_id);
    ASSERT_EQ(back.fs, rec.fs);
  }
}

TEST(CenterAlign, CropKeepsMidpointWindow) {
  AccelerationRecord rec;
  rec.data.resize(6 * kNumChannels);
  for (std::size_t t = 0; t < 6; ++t)
    for (int c = 0; c < kNumChannels; ++c) rec.at(t, c) = static_cast<double>(t);
  const auto out = center_align(rec, 4);
  ASSERT_EQ(out.length(), 4u);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(out.at(t, 0), static_cast<double>(t + 1));
}

TEST(CenterAlign, IdentityWhenSameLength) {
  Rng rng(1);
  const auto rec = random_record(rng, 4);
  const auto out = center_align(rec, 4);
  EXPECT_EQ(out.data, rec.data);
}

TEST(CenterAlign, PadsSymmetricallyWithTrailingExtra) {
  AccelerationRecord rec;
  rec.data = {1, 1, 1, 2, 2, 2};  // T=2: samples a=1, b=2 on all channels
  const auto out = center_align(rec, 5);
  ASSERT_EQ(out.length(), 5u);
  const double want[5] = {0, 1, 2, 0, 0};
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(out.at(t, 0), want[t]);
}

TEST(Standardize, ConstantChannelHitsFloor) {
  AccelerationRecord rec;
  rec.data.resize(8 * kNumChannels);
  for (std::size_t t = 0; t < 8; ++t) {
    rec.at(t, 0) = 5.0;
    rec.at(t, 1) = static_cast<double>(t);
    rec.at(t, 2) = static_cast<double>(t);
  }
  const auto [out, stats] = standardize(rec);
  EXPECT_DOUBLE_EQ(stats.mean[0], 5.0);
  EXPECT_DOUBLE_EQ(stats.std[0], kStdFloor);
  for (std::size_t t = 0; t < 8; ++t) EXPECT_EQ(out.at(t, 0), 0.0);
}

TEST(Standardize, TwoPointChannelIsFixedPoint) {
  AccelerationRecord rec;
  rec.data = {-1, -1, -1, 1, 1, 1};
  const auto [out, stats] = standardize(rec);
  for (int c = 0; c < kNumChannels; ++c) {
    EXPECT_DOUBLE_EQ(stats.mean[c], 0.0);
    EXPECT_DOUBLE_EQ(stats.std[c], 1.0);  // population std
    EXPECT_DOUBLE_EQ(out.at(0, c), -1.0);
    EXPECT_DOUBLE_EQ(out.at(1, c), 1.0);
  }
}

TEST(Standardize, RoundTripWithinTolerance) {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto rec = random_record(rng, 64);
    const auto [std_rec, stats] = standardize(rec);
    const auto back = destandardize(std_rec, stats);
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
      const double scale = std::max(1.0, std::abs(rec.data[i]));
      ASSERT_NEAR(back.data[i], rec.data[i], 1e-9 * scale);
    }
  }
}

TEST(Destandardize, ZeroInputGivesMeans) {
  AccelerationRecord rec;
  rec.data.assign(4 * kNumChannels, 0.0);
  NormalizationStats stats;
  stats.mean = {1.0, 2.0, 3.0};
  stats.std = {1.0, 1.0, 1.0};
  const auto out = destandardize(rec, stats);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_EQ(out.at(t, 0), 1.0);
    EXPECT_EQ(out.at(t, 1), 2.0);
    EXPECT_EQ(out.at(t, 2), 3.0);
  }
}

TEST(SplitCorpus, PartitionsByHoldout) {
  CorpusManifest m;
  m.stations = {{"A", "", 5.0, 2}, {"B", "", 2.0, 1}};
  m.records = {{"a0", "A", "e"}, {"b0", "B", "e"}, {"a1", "A", "e"}};
  const auto [pre, fine] = split_corpus(m, {"B"});
  ASSERT_EQ(pre.records.size(), 2u);
  ASSERT_EQ(fine.records.size(), 1u);
  EXPECT_EQ(fine.records[0].station_id, "B");
  for (const auto& r : pre.records) EXPECT_EQ(r.station_id, "A");
  EXPECT_EQ(pre.records.size() + fine.records.size(), m.records.size());
}

TEST(SplitCorpus, EmptyHoldoutGivesEmptyFinetune) {
  CorpusManifest m;
  m.stations = {{"A", "", 5.0, 1}};
  m.records = {{"a0", "A", "e"}};
  const auto [pre, fine] = split_corpus(m, {});
  EXPECT_EQ(fine.records.size(), 0u);
  EXPECT_EQ(pre.records.size(), 1u);
}

TEST(SplitCorpus, UnknownStationIsConfigError) {
  CorpusManifest m;
  m.stations = {{"A", "", 5.0, 1}};
  m.records = {{"a0", "A", "e"}};
  EXPECT_THROW(split_corpus(m, {"Z"}), ConfigError);
}

TEST(SplitCorpus, PaperScaleAnalogueCounts) {
  CorpusManifest m;
  const auto profiles = default_station_profiles();
  const auto counts = default_station_counts();
  m.stations.push_back({"BG", "", 3.0, 10});
  for (std::size_t i = 0; i < 10; ++i) m.records.push_back({"bg", "BG", "e"});
  std::set<std::string> holdout;
  for (std::size_t s = 0; s < profiles.size(); ++s) {
    m.stations.push_back({profiles[s].station_id, "", profiles[s].f0_hz, counts[s]});
    for (std::size_t i = 0; i < counts[s]; ++i)
      m.records.push_back({"r", profiles[s].station_id, "e"});
    holdout.insert(profiles[s].station_id);
  }
  const auto [pre, fine] = split_corpus(m, holdout);
  EXPECT_EQ(fine.records.size(), 348u);  // 71+38+98+110+31
  EXPECT_EQ(pre.records.size(), 10u);
}

TEST(ManifestIo, RoundTrip) {
  CorpusManifest m;
  m.stations = {{"A", "somewhere", 5.1, 2}, {"B", "elsewhere", 1.8, 0}};
  m.records = {{"rec/a0.rec", "A", "e0"}, {"rec/a1.rec", "A", "e1"}};
  const auto dir = temp_dir();
  save_manifest(m, (dir / "records.csv").string(), (dir / "stations.csv").string());
  const auto back =
      load_manifest((dir / "records.csv").string(), (dir / "stations.csv").string());
  ASSERT_EQ(back.records.size(), 2u);
  ASSERT_EQ(back.stations.size(), 2u);
  EXPECT_EQ(back.records[1].path, "rec/a1.rec");
  EXPECT_DOUBLE_EQ(back.stations[0].f0_ref, 5.1);
  EXPECT_EQ(back.stations[1].n_records, 0u);
}

TEST(Synth, SameSeedGivesIdenticalRecords) {
  const StationProfile profile{"S", 5.0, 0.05, 1.0, 0.05};
  const auto a = synth_station_record(profile, 10.0, 100.0, 123);
  const auto b = synth_station_record(profile, 10.0, 100.0, 123);
  ASSERT_EQ(a.data.size(), b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_EQ(a.data[i], b.data[i]);
  const auto c = synth_station_record(profile, 10.0, 100.0, 124);
  bool differs = false;
  for (std::size_t i = 0; i < a.data.size() && !differs; ++i)
    differs = a.data[i] != c.data[i];
  EXPECT_TRUE(differs);
}

TEST(Synth, RejectsBadFundamental) {
  StationProfile profile{"S", 60.0, 0.05, 1.0, 0.05};
  EXPECT_THROW(synth_station_record(profile, 10.0, 100.0, 1), ConfigError);
  profile.f0_hz = 0.0;
  EXPECT_THROW(synth_station_record(profile, 10.0, 100.0, 1), ConfigError);
}
