#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "smgen/record.hpp"
#include "smgen/rng.hpp"
#include "smgen/timesnet.hpp"

namespace smgen {

// A record made trainable: center-aligned to seq_len and standardized.
struct PreparedRecord {
  nn::Tensor x;  // {seq_len, 3}
  NormalizationStats stats;
  std::string station_id;
  std::string event_id;
  double fs = 100.0;
  int station_idx = -1;  // index into the conditioning table, -1 = none
};

inline PreparedRecord prepare_record(const AccelerationRecord& rec,
                                     std::size_t seq_len, int station_idx = -1) {
  const auto aligned = center_align(rec, seq_len);
  auto [std_rec, stats] = standardize(aligned);
  PreparedRecord out;
  out.x = nn::Tensor({seq_len, static_cast<std::size_t>(kNumChannels)});
  out.x.v = std_rec.data;
  out.stats = stats;
  out.station_id = rec.station_id;
  out.event_id = rec.event_id;
  out.fs = rec.fs;
  out.station_idx = station_idx;
  return out;
}

inline AccelerationRecord tensor_to_acceleration(const nn::Tensor& y,
                                                 const NormalizationStats& stats,
                                                 const std::string& station_id,
                                                 double fs) {
  AccelerationRecord rec;
  rec.station_id = station_id;
  rec.fs = fs;
  rec.data = y.v;
  return destandardize(rec, stats);
}

namespace detail {

// Time-domain MSE between the destandardized output and the raw input,
// evaluated in standardized space with per-channel std^2 weights (the
// de-normalization is affine, so the two are the same number).
inline double weighted_mse_grad(const nn::Tensor& pred, const nn::Tensor& target,
                                const NormalizationStats& stats, nn::Tensor& dy) {
  const std::size_t t_len = pred.shape[0];
  const double inv = 1.0 / static_cast<double>(pred.v.size());
  dy = nn::Tensor({t_len, static_cast<std::size_t>(kNumChannels)});
  double loss = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    for (int c = 0; c < kNumChannels; ++c) {
      const double w = stats.std[c] * stats.std[c];
      const double diff = pred.v[t * kNumChannels + c] - target.v[t * kNumChannels + c];
      loss += w * diff * diff * inv;
      dy.v[t * kNumChannels + c] = 2.0 * w * diff * inv;
    }
  }
  return loss;
}

}  // namespace detail

struct StationLatentStats {
  std::string station_id;
  int station_idx = -1;
  double fs = 100.0;
  std::vector<std::vector<double>> codes;  // pool, one code per record
  std::vector<double> sigma;               // per-dimension std over the pool
  NormalizationStats pool_norm;            // arithmetic mean of record stats
};

// Pool centroid summed in ascending pool order; sample_station with
// N == pool size must reproduce this bit-for-bit.
inline std::vector<double> pool_centroid(const StationLatentStats& stats) {
  if (stats.codes.empty()) throw DataError("pool_centroid: empty pool");
  const std::size_t dim = stats.codes.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& code : stats.codes)
    for (std::size_t i = 0; i < dim; ++i) mean[i] += code[i];
  const double inv = 1.0 / static_cast<double>(stats.codes.size());
  for (auto& v : mean) v *= inv;
  return mean;
}

// Clean (noise-free) per-station latent statistics under the given
// conditioning mode.
inline std::vector<StationLatentStats> compute_station_stats(
    TimesNetModel& model, const std::vector<PreparedRecord>& records,
    const std::vector<std::string>& station_ids, bool conditioned) {
  std::vector<StationLatentStats> out(station_ids.size());
  for (std::size_t s = 0; s < station_ids.size(); ++s) {
    out[s].station_id = station_ids[s];
    out[s].station_idx = static_cast<int>(s);
  }
  std::vector<std::array<double, 2 * kNumChannels>> norm_acc(
      station_ids.size(), std::array<double, 2 * kNumChannels>{});
  for (const auto& rec : records) {
    if (rec.station_idx < 0 ||
        rec.station_idx >= static_cast<int>(station_ids.size()))
      throw ConfigError("compute_station_stats: record station '" +
                        rec.station_id + "' not in the conditioning table");
    const auto cond = conditioned
                          ? one_hot_station(model.cfg.n_stations,
                                            static_cast<std::size_t>(rec.station_idx))
                          : zero_condition(model.cfg.n_stations);
    out[rec.station_idx].codes.push_back(model.encode(rec.x, cond));
    out[rec.station_idx].fs = rec.fs;
    for (int c = 0; c < kNumChannels; ++c) {
      norm_acc[rec.station_idx][c] += rec.stats.mean[c];
      norm_acc[rec.station_idx][kNumChannels + c] += rec.stats.std[c];
    }
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    auto& st = out[s];
    if (st.codes.empty()) continue;
    const std::size_t dim = st.codes.front().size();
    const double n = static_cast<double>(st.codes.size());
    st.sigma.assign(dim, 0.0);
    std::vector<double> mean(dim, 0.0);
    for (const auto& code : st.codes)
      for (std::size_t i = 0; i < dim; ++i) mean[i] += code[i] / n;
    for (const auto& code : st.codes)
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = code[i] - mean[i];
        st.sigma[i] += d * d / n;
      }
    for (auto& v : st.sigma) v = std::sqrt(v);
    for (int c = 0; c < kNumChannels; ++c) {
      st.pool_norm.mean[c] = norm_acc[s][c] / n;
      st.pool_norm.std[c] = norm_acc[s][kNumChannels + c] / n;
    }
  }
  return out;
}

// Unconditioned autoencoding pass over the pretraining set. Deterministic
// given (seed, record order); aborts with a diagnostic if the loss leaves
// the reals.
inline std::vector<double> train_phase0(TimesNetModel& model,
                                        const std::vector<PreparedRecord>& records,
                                        std::size_t epochs, double lr,
                                        std::uint64_t seed) {
  if (records.empty()) throw ConfigError("train_phase0: empty training set");
  auto params = model.parameters();
  nn::AdamState opt;
  opt.lr = lr;
  Rng rng(seed);
  const auto cond = zero_condition(model.cfg.n_stations);
  std::vector<double> epoch_losses;
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& rec = records[i];
      TimesNetModel::EncodeCache ec;
      TimesNetModel::DecodeCache dc;
      const auto z = model.encode(rec.x, cond, &ec);
      const nn::Tensor y = model.decode(z, cond, &dc);
      nn::Tensor dy;
      const double loss = detail::weighted_mse_grad(y, rec.x, rec.stats, dy);
      if (!std::isfinite(loss))
        throw DivergenceError("train_phase0: non-finite loss at epoch " +
                              std::to_string(epoch));
      total += loss;
      const auto dz = model.decode_backward(dy, dc);
      model.encode_backward(dz, ec, cond);
      nn::adam_step(params, opt);
      nn::zero_grads(params);
    }
    epoch_losses.push_back(total / static_cast<double>(records.size()));
  }
  return epoch_losses;
}

struct FinetuneResult {
  std::vector<double> epoch_losses;
  std::vector<StationLatentStats> stats;
};

// Station-conditioned fine-tuning. Encoder latents are perturbed with
// Gaussian noise scaled by the per-station latent std (recomputed from clean
// encodes at the start of every epoch) before decoding; final stats come
// from clean encodes of the finished model.
inline FinetuneResult finetune_phase1(TimesNetModel& model,
                                      const std::vector<PreparedRecord>& records,
                                      const std::vector<std::string>& station_ids,
                                      std::size_t epochs, double lr,
                                      double noise_scale, std::uint64_t seed) {
  if (records.empty()) throw ConfigError("finetune_phase1: empty training set");
  if (station_ids.size() != model.cfg.n_stations)
    throw ConfigError("finetune_phase1: station table size does not match model");
  for (const auto& rec : records)
    if (rec.station_idx < 0 ||
        rec.station_idx >= static_cast<int>(station_ids.size()))
      throw ConfigError("finetune_phase1: record station '" + rec.station_id +
                        "' is not in the conditioning table");
  auto params = model.parameters();
  nn::AdamState opt;
  opt.lr = lr;
  Rng rng(seed);
  FinetuneResult result;
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto stats = compute_station_stats(model, records, station_ids, true);
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& rec = records[i];
      const auto cond = one_hot_station(model.cfg.n_stations,
                                        static_cast<std::size_t>(rec.station_idx));
      TimesNetModel::EncodeCache ec;
      TimesNetModel::DecodeCache dc;
      auto z = model.encode(rec.x, cond, &ec);
      const auto& sigma = stats[rec.station_idx].sigma;
      for (std::size_t j = 0; j < z.size(); ++j)
        z[j] += noise_scale * sigma[j] * rng.normal();
      const nn::Tensor y = model.decode(z, cond, &dc);
      nn::Tensor dy;
      const double loss = detail::weighted_mse_grad(y, rec.x, rec.stats, dy);
      if (!std::isfinite(loss))
        throw DivergenceError("finetune_phase1: non-finite loss at epoch " +
                              std::to_string(epoch));
      total += loss;
      // Additive noise: the latent gradient passes through unchanged.
      const auto dz = model.decode_backward(dy, dc);
      model.encode_backward(dz, ec, cond);
      nn::adam_step(params, opt);
      nn::zero_grads(params);
    }
    result.epoch_losses.push_back(total / static_cast<double>(records.size()));
  }
  result.stats = compute_station_stats(model, records, station_ids, true);
  return result;
}

// Average N distinct pool codes, add per-dimension Gaussian noise scaled by
// the pool std, decode under the station's one-hot condition, destandardize
// with the pool-average normalization stats. scalar_sigma collapses the
// noise scale to the mean of the per-dimension stds.
inline AccelerationRecord sample_station(TimesNetModel& model,
                                         const StationLatentStats& stats,
                                         std::size_t n_avg, std::uint64_t seed,
                                         bool with_noise = true,
                                         bool scalar_sigma = false) {
  if (n_avg < 1) throw DataError("sample_station: N must be >= 1");
  if (stats.codes.size() < n_avg)
    throw DataError("sample_station: pool of " + std::to_string(stats.codes.size()) +
                    " codes is smaller than N=" + std::to_string(n_avg));
  Rng rng(seed);
  auto idx = rng.sample_indices(stats.codes.size(), n_avg);
  std::sort(idx.begin(), idx.end());  // summation order matches pool_centroid
  const std::size_t dim = stats.codes.front().size();
  std::vector<double> z(dim, 0.0);
  for (auto i : idx)
    for (std::size_t j = 0; j < dim; ++j) z[j] += stats.codes[i][j];
  const double inv = 1.0 / static_cast<double>(n_avg);
  for (auto& v : z) v *= inv;
  if (with_noise) {
    double scalar = 0.0;
    if (scalar_sigma) {
      for (double s : stats.sigma) scalar += s;
      scalar /= static_cast<double>(stats.sigma.size());
    }
    for (std::size_t j = 0; j < dim; ++j)
      z[j] += (scalar_sigma ? scalar : stats.sigma[j]) * rng.normal();
  }
  const auto cond =
      stats.station_idx >= 0
          ? one_hot_station(model.cfg.n_stations,
                            static_cast<std::size_t>(stats.station_idx))
          : zero_condition(model.cfg.n_stations);
  const nn::Tensor y = model.decode(z, cond);
  return tensor_to_acceleration(y, stats.pool_norm, stats.station_id, stats.fs);
}

// Zero-shot path: pool the unconditioned encoder's codes for one station's
// records and run the identical averaging/noise/decode procedure with an
// all-zero condition vector.
inline StationLatentStats zero_shot_pool(TimesNetModel& model,
                                         const std::vector<PreparedRecord>& records,
                                         const std::string& station_id) {
  StationLatentStats stats;
  stats.station_id = station_id;
  stats.station_idx = -1;  // keeps the condition vector at zero
  const auto cond = zero_condition(model.cfg.n_stations);
  std::array<double, 2 * kNumChannels> norm_acc{};
  for (const auto& rec : records) {
    if (rec.station_id != station_id) continue;
    stats.codes.push_back(model.encode(rec.x, cond));
    stats.fs = rec.fs;
    for (int c = 0; c < kNumChannels; ++c) {
      norm_acc[c] += rec.stats.mean[c];
      norm_acc[kNumChannels + c] += rec.stats.std[c];
    }
  }
  if (stats.codes.empty())
    throw DataError("zero_shot_pool: no records for station " + station_id);
  const double n = static_cast<double>(stats.codes.size());
  const std::size_t dim = stats.codes.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& code : stats.codes)
    for (std::size_t i = 0; i < dim; ++i) mean[i] += code[i] / n;
  stats.sigma.assign(dim, 0.0);
  for (const auto& code : stats.codes)
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = code[i] - mean[i];
      stats.sigma[i] += d * d / n;
    }
  for (auto& v : stats.sigma) v = std::sqrt(v);
  for (int c = 0; c < kNumChannels; ++c) {
    stats.pool_norm.mean[c] = norm_acc[c] / n;
    stats.pool_norm.std[c] = norm_acc[kNumChannels + c] / n;
  }
  return stats;
}

inline AccelerationRecord zero_shot_generate(TimesNetModel& model,
                                             const StationLatentStats& pool,
                                             std::size_t n_avg, std::uint64_t seed,
                                             bool with_noise = true) {
  return sample_station(model, pool, n_avg, seed, with_noise);
}

}  // namespace smgen
