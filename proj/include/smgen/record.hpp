#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smgen/errors.hpp"

namespace smgen {

inline constexpr int kNumChannels = 3;  // N-S, E-W, vertical
inline constexpr double kStdFloor = 1e-8;

// Three-channel acceleration time series. Samples are row-major T x 3 so a
// sample is data[t * 3 + c]; channel order is N-S, E-W, vertical.
struct AccelerationRecord {
  std::string station_id;
  std::string event_id;
  double fs = 100.0;
  std::vector<double> data;

  std::size_t length() const { return data.size() / kNumChannels; }
  double& at(std::size_t t, int c) { return data[t * kNumChannels + c]; }
  double at(std::size_t t, int c) const { return data[t * kNumChannels + c]; }

  std::vector<double> channel(int c) const {
    const std::size_t n = length();
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = at(t, c);
    return out;
  }
};

struct NormalizationStats {
  std::array<double, kNumChannels> mean{0.0, 0.0, 0.0};
  std::array<double, kNumChannels> std{1.0, 1.0, 1.0};
};

struct StationInfo {
  std::string station_id;
  std::string location;
  double f0_ref = 0.0;  // Hz
  std::size_t n_records = 0;
};

struct ManifestEntry {
  std::string path;
  std::string station_id;
  std::string event_id;
};

struct CorpusManifest {
  std::vector<ManifestEntry> records;
  std::vector<StationInfo> stations;

  const StationInfo* find_station(const std::string& id) const {
    for (const auto& s : stations)
      if (s.station_id == id) return &s;
    return nullptr;
  }
};

namespace detail {

// %.17g keeps the decimal text round-trippable to the exact double.
inline void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace detail

// Record file layout: header lines station=, event=, fs=, n=, one blank
// line, then n lines of three space-separated decimal floats, LF endings.
inline void save_record(const AccelerationRecord& rec, const std::string& path) {
  std::string out;
  out.reserve(rec.length() * 60 + 128);
  out += "station=" + rec.station_id + "\n";
  out += "event=" + rec.event_id + "\n";
  out += "fs=";
  detail::append_double(out, rec.fs);
  out += "\nn=" + std::to_string(rec.length()) + "\n\n";
  for (std::size_t t = 0; t < rec.length(); ++t) {
    detail::append_double(out, rec.at(t, 0));
    out += ' ';
    detail::append_double(out, rec.at(t, 1));
    out += ' ';
    detail::append_double(out, rec.at(t, 2));
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_record: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("save_record: write failed for " + path);
}

inline AccelerationRecord load_record(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_record: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();

  AccelerationRecord rec;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  long long declared_n = -1;
  bool saw_fs = false;

  auto fail = [&](const std::string& why) -> void {
    throw DataError("load_record: " + path + ":" + std::to_string(line_no) +
                    " (byte " + std::to_string(pos) + "): " + why);
  };

  auto next_line = [&](std::string& line) -> bool {
    if (pos >= text.size()) return false;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      line = text.substr(pos);
      pos = text.size();
    } else {
      line = text.substr(pos, nl - pos);
      pos = nl + 1;
    }
    ++line_no;
    return true;
  };

  // Header.
  std::string line;
  while (true) {
    if (!next_line(line)) fail("unexpected end of file in header");
    if (line.empty()) break;  // blank line ends the header
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "station") {
      rec.station_id = val;
    } else if (key == "event") {
      rec.event_id = val;
    } else if (key == "fs") {
      char* end = nullptr;
      rec.fs = std::strtod(val.c_str(), &end);
      if (end == val.c_str() || *end != '\0' || !(rec.fs > 0.0) ||
          !std::isfinite(rec.fs))
        fail("invalid fs '" + val + "'");
      saw_fs = true;
    } else if (key == "n") {
      char* end = nullptr;
      declared_n = std::strtoll(val.c_str(), &end, 10);
      if (end == val.c_str() || *end != '\0' || declared_n < 1)
        fail("invalid n '" + val + "'");
    } else {
      fail("unknown header key '" + key + "'");
    }
  }
  if (!saw_fs) fail("missing fs header");
  if (declared_n < 1) fail("missing n header");

  rec.data.reserve(static_cast<std::size_t>(declared_n) * kNumChannels);
  for (long long i = 0; i < declared_n; ++i) {
    if (!next_line(line))
      fail("expected " + std::to_string(declared_n) + " sample lines, got " +
           std::to_string(i));
    const char* p = line.c_str();
    for (int c = 0; c < kNumChannels; ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) fail("expected 3 columns, found " + std::to_string(c));
      if (!std::isfinite(v)) fail("non-finite sample in column " + std::to_string(c));
      rec.data.push_back(v);
      p = end;
      while (*p == ' ') ++p;
    }
    if (*p != '\0') fail("trailing data after 3 columns");
  }
  return rec;
}

// Fixed-length view centered on the midpoint: center crop when longer,
// symmetric zero padding (extra zero trails) when shorter.
inline AccelerationRecord center_align(const AccelerationRecord& rec,
                                       std::size_t target_len) {
  if (target_len < 1) throw ShapeError("center_align: target_len must be >= 1");
  const std::size_t n = rec.length();
  AccelerationRecord out;
  out.station_id = rec.station_id;
  out.event_id = rec.event_id;
  out.fs = rec.fs;
  if (n == target_len) {
    out.data = rec.data;
    return out;
  }
  out.data.assign(target_len * kNumChannels, 0.0);
  if (n > target_len) {
    const std::size_t start = (n - target_len) / 2;
    std::memcpy(out.data.data(), rec.data.data() + start * kNumChannels,
                target_len * kNumChannels * sizeof(double));
  } else {
    const std::size_t lead = (target_len - n) / 2;
    std::memcpy(out.data.data() + lead * kNumChannels, rec.data.data(),
                n * kNumChannels * sizeof(double));
  }
  return out;
}

// Per-channel standardization with population (1/T) standard deviation.
// A channel whose raw std falls below kStdFloor is only mean-centered and
// its std is recorded as kStdFloor, so destandardize never divides by ~0.
inline std::pair<AccelerationRecord, NormalizationStats> standardize(
    const AccelerationRecord& rec) {
  const std::size_t n = rec.length();
  if (n < 2) throw ShapeError("standardize: need at least 2 samples");
  AccelerationRecord out = rec;
  NormalizationStats stats;
  for (int c = 0; c < kNumChannels; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += rec.at(t, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double d = rec.at(t, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    stats.mean[c] = mean;
    if (sd < kStdFloor) {
      stats.std[c] = kStdFloor;
      for (std::size_t t = 0; t < n; ++t) out.at(t, c) = rec.at(t, c) - mean;
    } else {
      stats.std[c] = sd;
      for (std::size_t t = 0; t < n; ++t)
        out.at(t, c) = (rec.at(t, c) - mean) / sd;
    }
  }
  return {out, stats};
}

inline AccelerationRecord destandardize(const AccelerationRecord& rec,
                                        const NormalizationStats& stats) {
  AccelerationRecord out = rec;
  const std::size_t n = rec.length();
  for (std::size_t t = 0; t < n; ++t)
    for (int c = 0; c < kNumChannels; ++c)
      out.at(t, c) = rec.at(t, c) * stats.std[c] + stats.mean[c];
  return out;
}

// Partition by holdout stations: finetune = holdout records, pretrain = rest.
inline std::pair<CorpusManifest, CorpusManifest> split_corpus(
    const CorpusManifest& manifest, const std::set<std::string>& holdout) {
  for (const auto& id : holdout)
    if (!manifest.find_station(id))
      throw ConfigError("split_corpus: unknown holdout station '" + id + "'");
  CorpusManifest pretrain, finetune;
  for (const auto& s : manifest.stations) {
    StationInfo si = s;
    si.n_records = 0;
    if (holdout.count(s.station_id))
      finetune.stations.push_back(si);
    else
      pretrain.stations.push_back(si);
  }
  auto bump = [](CorpusManifest& m, const std::string& id) {
    for (auto& s : m.stations)
      if (s.station_id == id) ++s.n_records;
  };
  for (const auto& r : manifest.records) {
    if (holdout.count(r.station_id)) {
      finetune.records.push_back(r);
      bump(finetune, r.station_id);
    } else {
      pretrain.records.push_back(r);
      bump(pretrain, r.station_id);
    }
  }
  return {pretrain, finetune};
}

// Manifest CSVs: records as path,station_id,event_id; stations as
// station_id,location,f0_ref,n_records. Fields are kept comma-free.
inline void save_manifest(const CorpusManifest& m, const std::string& records_csv,
                          const std::string& stations_csv) {
  {
    std::ofstream f(records_csv, std::ios::binary);
    if (!f) throw DataError("save_manifest: cannot open " + records_csv);
    f << "path,station_id,event_id\n";
    for (const auto& r : m.records)
      f << r.path << ',' << r.station_id << ',' << r.event_id << '\n';
  }
  {
    std::ofstream f(stations_csv, std::ios::binary);
    if (!f) throw DataError("save_manifest: cannot open " + stations_csv);
    f << "station_id,location,f0_ref,n_records\n";
    for (const auto& s : m.stations) {
      std::string line = s.station_id + ',' + s.location + ',';
      detail::append_double(line, s.f0_ref);
      f << line << ',' << s.n_records << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline CorpusManifest load_manifest(const std::string& records_csv,
                                    const std::string& stations_csv) {
  CorpusManifest m;
  {
    std::ifstream f(records_csv);
    if (!f) throw DataError("load_manifest: cannot open " + records_csv);
    std::string line;
    if (!std::getline(f, line) || line != "path,station_id,event_id")
      throw DataError("load_manifest: bad header in " + records_csv);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto cols = detail::split_csv_line(line);
      if (cols.size() != 3)
        throw DataError("load_manifest: expected 3 columns in " + records_csv +
                        ", got '" + line + "'");
      m.records.push_back({cols[0], cols[1], cols[2]});
    }
  }
  {
    std::ifstream f(stations_csv);
    if (!f) throw DataError("load_manifest: cannot open " + stations_csv);
    std::string line;
    if (!std::getline(f, line) ||
        line != "station_id,location,f0_ref,n_records")
      throw DataError("load_manifest: bad header in " + stations_csv);
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      const auto cols = detail::split_csv_line(line);
      if (cols.size() != 4)
        throw DataError("load_manifest: expected 4 columns in " + stations_csv +
                        ", got '" + line + "'");
      StationInfo s;
      s.station_id = cols[0];
      s.location = cols[1];
      s.f0_ref = std::strtod(cols[2].c_str(), nullptr);
      s.n_records = static_cast<std::size_t>(std::strtoull(cols[3].c_str(), nullptr, 10));
      m.stations.push_back(s);
    }
  }
  for (const auto& r : m.records)
    if (!m.find_station(r.station_id))
      throw DataError("load_manifest: record station '" + r.station_id +
                      "' missing from station table");
  return m;
}

}  // namespace smgen
