#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "smgen/checkpoint.hpp"
#include "smgen/errors.hpp"
#include "smgen/fft.hpp"
#include "smgen/nn.hpp"
#include "smgen/record.hpp"
#include "smgen/rng.hpp"

namespace smgen {

struct TimesNetConfig {
  std::size_t seq_len = 3000;
  std::size_t d_model = 32;
  std::size_t d_ff = 32;
  std::size_t n_blocks_enc = 2;
  std::size_t n_blocks_dec = 2;
  std::size_t top_k = 3;
  std::vector<std::size_t> kernel_sizes = {1, 3, 5};
  std::size_t latent_dim = 64;
  std::size_t n_stations = 5;

  void validate() const {
    if (seq_len < 4) throw ConfigError("timesnet: seq_len too short");
    if (top_k < 1 || top_k >= seq_len / 2)
      throw ConfigError("timesnet: need 1 <= top_k < seq_len/2");
    if (latent_dim < 1) throw ConfigError("timesnet: latent_dim must be >= 1");
    if (d_model < 1 || d_ff < 1) throw ConfigError("timesnet: bad channel width");
    if (kernel_sizes.empty()) throw ConfigError("timesnet: no kernel sizes");
    for (auto k : kernel_sizes)
      if (k % 2 == 0) throw ConfigError("timesnet: kernel sizes must be odd");
  }

  std::string digest_string() const {
    std::string s = "timesnet;seq=" + std::to_string(seq_len) +
                    ";d=" + std::to_string(d_model) + ";ff=" + std::to_string(d_ff) +
                    ";enc=" + std::to_string(n_blocks_enc) +
                    ";dec=" + std::to_string(n_blocks_dec) +
                    ";k=" + std::to_string(top_k) + ";kern=";
    for (auto k : kernel_sizes) s += std::to_string(k) + "_";
    s += ";lat=" + std::to_string(latent_dim) + ";S=" + std::to_string(n_stations);
    return s;
  }
  std::uint64_t digest() const { return fnv1a64(digest_string()); }
};

// One-hot station vector; all zeros selects the unconditioned mode used in
// phase-0 training and zero-shot generation.
inline std::vector<double> one_hot_station(std::size_t n_stations, std::size_t idx) {
  if (idx >= n_stations) throw ConfigError("one_hot_station: index out of range");
  std::vector<double> v(n_stations, 0.0);
  v[idx] = 1.0;
  return v;
}

inline std::vector<double> zero_condition(std::size_t n_stations) {
  return std::vector<double>(n_stations, 0.0);
}

// ---------------------------------------------------------------------------
// Period machinery.

struct PeriodSelection {
  std::vector<std::size_t> bins;     // frequency bins, amplitude-descending
  std::vector<std::size_t> periods;  // ceil(T / bin)
  std::vector<double> amps;          // channel-averaged magnitudes at bins
  std::vector<double> weights;       // softmax(amps)
  std::vector<std::complex<double>> spectra;  // k x d, row-major j*d + c
};

// Channel-averaged one-sided amplitude spectrum of {T, d} features; DC is
// excluded, ties in amplitude go to the lower frequency (longer period).
inline PeriodSelection select_periods(const nn::Tensor& x, std::size_t k) {
  if (x.shape.size() != 2) throw ShapeError("select_periods: expected {T,d}");
  const std::size_t t_len = x.shape[0], d = x.shape[1];
  if (t_len < 2 || k < 1 || k >= (t_len + 1) / 2)
    throw ShapeError("select_periods: need 1 <= k < T/2");
  const std::size_t bins = t_len / 2 + 1;
  std::vector<std::vector<std::complex<double>>> spec(d);
  std::vector<double> col(t_len);
  std::vector<double> avg_amp(bins, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < t_len; ++t) col[t] = x.v[t * d + c];
    spec[c] = fft::rfft(col);
    for (std::size_t f = 1; f < bins; ++f) avg_amp[f] += std::abs(spec[c][f]);
  }
  for (auto& a : avg_amp) a /= static_cast<double>(d);

  std::vector<std::size_t> order(bins - 1);
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (avg_amp[a] != avg_amp[b]) return avg_amp[a] > avg_amp[b];
    return a < b;
  });

  PeriodSelection sel;
  const std::size_t kk = std::min(k, order.size());
  for (std::size_t j = 0; j < kk; ++j) {
    const std::size_t f = order[j];
    sel.bins.push_back(f);
    sel.periods.push_back((t_len + f - 1) / f);
    sel.amps.push_back(avg_amp[f]);
  }
  sel.weights = nn::softmax(sel.amps);
  sel.spectra.resize(kk * d);
  for (std::size_t j = 0; j < kk; ++j)
    for (std::size_t c = 0; c < d; ++c) sel.spectra[j * d + c] = spec[c][sel.bins[j]];
  return sel;
}

// {T, d} -> {d, rows, p} with rows = ceil(T/p); the tail is zero padded.
// Columns index phase within one period, rows index the period count.
inline nn::Tensor fold_to_2d(const nn::Tensor& x, std::size_t p) {
  if (x.shape.size() != 2) throw ShapeError("fold_to_2d: expected {T,d}");
  if (p < 1) throw ShapeError("fold_to_2d: period must be >= 1");
  const std::size_t t_len = x.shape[0], d = x.shape[1];
  const std::size_t rows = (t_len + p - 1) / p;
  nn::Tensor grid({d, rows, p});
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::size_t r = t / p, col = t % p;
    for (std::size_t c = 0; c < d; ++c)
      grid.v[(c * rows + r) * p + col] = x.v[t * d + c];
  }
  return grid;
}

inline nn::Tensor unfold_from_2d(const nn::Tensor& grid, std::size_t t_len) {
  if (grid.shape.size() != 3) throw ShapeError("unfold_from_2d: expected {d,rows,p}");
  const std::size_t d = grid.shape[0], rows = grid.shape[1], p = grid.shape[2];
  if (rows * p < t_len) throw ShapeError("unfold_from_2d: grid shorter than T");
  nn::Tensor x({t_len, d});
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::size_t r = t / p, col = t % p;
    for (std::size_t c = 0; c < d; ++c)
      x.v[t * d + c] = grid.v[(c * rows + r) * p + col];
  }
  return x;
}

// Station conditioning: append one constant plane per station slot and
// project back to d channels through a learned 1x1 convolution.
inline nn::Tensor condition_grid(const nn::Tensor& grid,
                                 const std::vector<double>& cond,
                                 const nn::Tensor& w, const nn::Tensor& b) {
  const std::size_t d = grid.shape[0], rows = grid.shape[1], p = grid.shape[2];
  const std::size_t s = cond.size();
  nn::Tensor aug({d + s, rows, p});
  std::copy(grid.v.begin(), grid.v.end(), aug.v.begin());
  for (std::size_t i = 0; i < s; ++i)
    std::fill_n(aug.v.begin() + (d + i) * rows * p, rows * p, cond[i]);
  return nn::conv2d(aug, w, b, 1, 0);
}

// ---------------------------------------------------------------------------
// Inception-style multi-kernel stack: parallel odd-sized square convolutions
// with same padding, averaged.

struct InceptionConv {
  std::vector<nn::Tensor> w;  // per kernel {out, in, k, k}
  std::vector<nn::Tensor> b;
  std::vector<std::size_t> kernels;

  void init(std::size_t in_ch, std::size_t out_ch,
            const std::vector<std::size_t>& kernel_sizes, Rng& rng) {
    kernels = kernel_sizes;
    w.clear();
    b.clear();
    for (auto k : kernels) {
      nn::Tensor wt({out_ch, in_ch, k, k});
      nn::xavier_init(wt, in_ch * k * k, out_ch * k * k, rng);
      w.push_back(std::move(wt));
      b.emplace_back(std::vector<std::size_t>{out_ch});
    }
  }

  nn::Tensor forward(const nn::Tensor& x) const {
    nn::Tensor y;
    for (std::size_t i = 0; i < w.size(); ++i) {
      nn::Tensor yi = nn::conv2d(x, w[i], b[i], 1, kernels[i] / 2);
      if (i == 0)
        y = std::move(yi);
      else
        for (std::size_t j = 0; j < y.v.size(); ++j) y.v[j] += yi.v[j];
    }
    const double inv = 1.0 / static_cast<double>(w.size());
    for (auto& v : y.v) v *= inv;
    return y;
  }

  nn::Tensor backward(const nn::Tensor& x, const nn::Tensor& dy) {
    const double inv = 1.0 / static_cast<double>(w.size());
    nn::Tensor dscaled = dy;
    for (auto& v : dscaled.v) v *= inv;
    nn::Tensor dx;
    for (std::size_t i = 0; i < w.size(); ++i) {
      nn::Tensor dxi = nn::conv2d_backward(x, w[i], b[i], dscaled, 1, kernels[i] / 2);
      if (i == 0)
        dx = std::move(dxi);
      else
        for (std::size_t j = 0; j < dx.v.size(); ++j) dx.v[j] += dxi.v[j];
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------
// TimesBlock: FFT period selection, period folding, conditioned inception
// convolutions, softmax-weighted aggregation, residual.

struct TimesBlock {
  std::size_t d_model = 0, d_ff = 0, top_k = 0, n_stations = 0;
  nn::Tensor cond_w, cond_b;  // 1x1 conv (d+S) -> d
  InceptionConv conv1;        // d -> d_ff
  InceptionConv conv2;        // d_ff -> d

  struct BranchCache {
    nn::Tensor aug;          // {d+S, rows, p}
    nn::Tensor conditioned;  // {d, rows, p}
    nn::Tensor pre_act;      // {d_ff, rows, p}
    nn::Tensor post_act;
    nn::Tensor branch_td;    // {T, d}
  };
  struct Cache {
    PeriodSelection sel;
    std::vector<BranchCache> branches;
    std::size_t t_len = 0;
  };

  void init(const TimesNetConfig& cfg, Rng& rng) {
    d_model = cfg.d_model;
    d_ff = cfg.d_ff;
    top_k = cfg.top_k;
    n_stations = cfg.n_stations;
    cond_w = nn::Tensor({d_model, d_model + n_stations, 1, 1});
    nn::xavier_init(cond_w, d_model + n_stations, d_model, rng);
    cond_b = nn::Tensor({d_model});
    conv1.init(d_model, d_ff, cfg.kernel_sizes, rng);
    conv2.init(d_ff, d_model, cfg.kernel_sizes, rng);
  }

  nn::Tensor forward(const nn::Tensor& x, const std::vector<double>& cond,
                     Cache& cache) {
    const std::size_t t_len = x.shape[0];
    cache.t_len = t_len;
    cache.sel = select_periods(x, top_k);
    cache.branches.clear();
    nn::Tensor y = x;  // residual
    for (std::size_t j = 0; j < cache.sel.periods.size(); ++j) {
      BranchCache br;
      const std::size_t p = cache.sel.periods[j];
      nn::Tensor grid = fold_to_2d(x, p);
      const std::size_t rows = grid.shape[1];
      br.aug = nn::Tensor({d_model + n_stations, rows, p});
      std::copy(grid.v.begin(), grid.v.end(), br.aug.v.begin());
      for (std::size_t i = 0; i < n_stations; ++i)
        std::fill_n(br.aug.v.begin() + (d_model + i) * rows * p, rows * p, cond[i]);
      br.conditioned = nn::conv2d(br.aug, cond_w, cond_b, 1, 0);
      br.pre_act = conv1.forward(br.conditioned);
      br.post_act = nn::map(br.pre_act, nn::gelu);
      nn::Tensor out2 = conv2.forward(br.post_act);
      br.branch_td = unfold_from_2d(out2, t_len);
      const double wj = cache.sel.weights[j];
      for (std::size_t i = 0; i < y.v.size(); ++i)
        y.v[i] += wj * br.branch_td.v[i];
      cache.branches.push_back(std::move(br));
    }
    return y;
  }

  nn::Tensor backward(const nn::Tensor& dy, Cache& cache) {
    const std::size_t t_len = cache.t_len;
    const std::size_t d = d_model;
    nn::Tensor dx = dy;  // residual path

    // Content path through each branch plus the soft aggregation weights.
    std::vector<double> dweights(cache.branches.size(), 0.0);
    for (std::size_t j = 0; j < cache.branches.size(); ++j) {
      auto& br = cache.branches[j];
      const double wj = cache.sel.weights[j];
      for (std::size_t i = 0; i < dy.v.size(); ++i)
        dweights[j] += dy.v[i] * br.branch_td.v[i];

      nn::Tensor dbranch({t_len, d});
      for (std::size_t i = 0; i < dy.v.size(); ++i)
        dbranch.v[i] = wj * dy.v[i];

      const std::size_t p = cache.sel.periods[j];
      const std::size_t rows = (t_len + p - 1) / p;
      nn::Tensor dout2({d, rows, p});
      for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t r = t / p, col = t % p;
        for (std::size_t c = 0; c < d; ++c)
          dout2.v[(c * rows + r) * p + col] = dbranch.v[t * d + c];
      }
      nn::Tensor dpost = conv2.backward(br.post_act, dout2);
      nn::Tensor dpre = nn::map_backward(br.pre_act, dpost, nn::gelu_grad);
      nn::Tensor dcondgrid = conv1.backward(br.conditioned, dpre);
      nn::Tensor daug = nn::conv2d_backward(br.aug, cond_w, cond_b, dcondgrid, 1, 0);
      // First d planes belong to the folded input; condition planes are
      // constants and contribute no input gradient.
      for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t r = t / p, col = t % p;
        for (std::size_t c = 0; c < d; ++c)
          dx.v[t * d + c] += daug.v[(c * rows + r) * p + col];
      }
    }

    // Weights came from softmax over channel-averaged DFT magnitudes of the
    // block input, so gradients continue through the selected bins.
    const std::vector<double> damps =
        nn::softmax_backward(cache.sel.weights, dweights);
    for (std::size_t j = 0; j < cache.branches.size(); ++j) {
      const std::size_t f = cache.sel.bins[j];
      std::vector<double> g_re(d, 0.0), g_im(d, 0.0);
      bool any = false;
      for (std::size_t c = 0; c < d; ++c) {
        const auto z = cache.sel.spectra[j * d + c];
        const double mag = std::abs(z);
        if (mag > 0.0) {
          const double coeff = damps[j] / (static_cast<double>(d) * mag);
          g_re[c] = coeff * z.real();
          g_im[c] = coeff * z.imag();
          any = true;
        }
      }
      if (!any) continue;
      for (std::size_t t = 0; t < t_len; ++t) {
        const double theta = 2.0 * std::numbers::pi *
                             static_cast<double>((f * t) % t_len) /
                             static_cast<double>(t_len);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (std::size_t c = 0; c < d; ++c)
          dx.v[t * d + c] += g_re[c] * ct - g_im[c] * st;
      }
    }
    return dx;
  }

  void collect(std::vector<std::pair<std::string, nn::Tensor*>>& out,
               const std::string& prefix) {
    out.emplace_back(prefix + ".cond.w", &cond_w);
    out.emplace_back(prefix + ".cond.b", &cond_b);
    for (std::size_t i = 0; i < conv1.w.size(); ++i) {
      out.emplace_back(prefix + ".conv1.w" + std::to_string(i), &conv1.w[i]);
      out.emplace_back(prefix + ".conv1.b" + std::to_string(i), &conv1.b[i]);
    }
    for (std::size_t i = 0; i < conv2.w.size(); ++i) {
      out.emplace_back(prefix + ".conv2.w" + std::to_string(i), &conv2.w[i]);
      out.emplace_back(prefix + ".conv2.b" + std::to_string(i), &conv2.b[i]);
    }
  }
};

// ---------------------------------------------------------------------------
// TimesNet-Gen: channel embedding, encoder blocks, latent bottleneck (no
// variational sampling, no KL prior), decoder blocks over a broadcast latent
// plus a learned positional table, linear head back to 3 channels.

struct TimesNetModel {
  TimesNetConfig cfg;
  nn::Tensor embed_w, embed_b;
  std::vector<TimesBlock> enc_blocks;
  nn::Tensor to_latent_w, to_latent_b;
  nn::Tensor from_latent_w, from_latent_b;
  nn::Tensor pos_emb;  // {seq_len, d_model}
  std::vector<TimesBlock> dec_blocks;
  nn::Tensor head_w, head_b;

  explicit TimesNetModel(const TimesNetConfig& config, std::uint64_t init_seed = 1)
      : cfg(config) {
    cfg.validate();
    Rng rng(init_seed);
    embed_w = nn::Tensor({static_cast<std::size_t>(kNumChannels), cfg.d_model});
    nn::xavier_init(embed_w, kNumChannels, cfg.d_model, rng);
    embed_b = nn::Tensor({cfg.d_model});
    enc_blocks.resize(cfg.n_blocks_enc);
    for (auto& b : enc_blocks) b.init(cfg, rng);
    to_latent_w = nn::Tensor({cfg.d_model, cfg.latent_dim});
    nn::xavier_init(to_latent_w, cfg.d_model, cfg.latent_dim, rng);
    to_latent_b = nn::Tensor({cfg.latent_dim});
    from_latent_w = nn::Tensor({cfg.latent_dim, cfg.d_model});
    nn::xavier_init(from_latent_w, cfg.latent_dim, cfg.d_model, rng);
    from_latent_b = nn::Tensor({cfg.d_model});
    pos_emb = nn::Tensor({cfg.seq_len, cfg.d_model});
    nn::xavier_init(pos_emb, cfg.d_model, cfg.d_model, rng);
    dec_blocks.resize(cfg.n_blocks_dec);
    for (auto& b : dec_blocks) b.init(cfg, rng);
    head_w = nn::Tensor({cfg.d_model, static_cast<std::size_t>(kNumChannels)});
    nn::xavier_init(head_w, cfg.d_model, kNumChannels, rng);
    head_b = nn::Tensor({static_cast<std::size_t>(kNumChannels)});
  }

  std::vector<std::pair<std::string, nn::Tensor*>> named_parameters() {
    std::vector<std::pair<std::string, nn::Tensor*>> out;
    out.emplace_back("embed.w", &embed_w);
    out.emplace_back("embed.b", &embed_b);
    for (std::size_t i = 0; i < enc_blocks.size(); ++i)
      enc_blocks[i].collect(out, "enc" + std::to_string(i));
    out.emplace_back("to_latent.w", &to_latent_w);
    out.emplace_back("to_latent.b", &to_latent_b);
    out.emplace_back("from_latent.w", &from_latent_w);
    out.emplace_back("from_latent.b", &from_latent_b);
    out.emplace_back("pos_emb", &pos_emb);
    for (std::size_t i = 0; i < dec_blocks.size(); ++i)
      dec_blocks[i].collect(out, "dec" + std::to_string(i));
    out.emplace_back("head.w", &head_w);
    out.emplace_back("head.b", &head_b);
    return out;
  }

  std::vector<nn::Tensor*> parameters() {
    std::vector<nn::Tensor*> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  void save(const std::string& path) {
    std::vector<std::pair<std::string, const nn::Tensor*>> named;
    for (auto& [n, t] : named_parameters()) named.emplace_back(n, t);
    save_checkpoint(path, named, cfg.digest());
  }

  void load(const std::string& path) {
    load_checkpoint(path, named_parameters(), cfg.digest());
  }

  struct EncodeCache {
    nn::Tensor x;       // {T, 3}
    nn::Tensor h0;      // embedded
    std::vector<TimesBlock::Cache> blocks;
    std::vector<nn::Tensor> hs;  // input to each block (hs[i]) plus final
    nn::Tensor pooled;  // {1, d}
  };

  std::vector<double> encode(const nn::Tensor& x, const std::vector<double>& cond,
                             EncodeCache* cache = nullptr) {
    if (x.shape.size() != 2 || x.shape[0] != cfg.seq_len ||
        x.shape[1] != kNumChannels)
      throw ShapeError("encode: expected {" + std::to_string(cfg.seq_len) +
                       ",3}, got " + nn::shape_str(x));
    if (cond.size() != cfg.n_stations)
      throw ShapeError("encode: condition length mismatch");
    EncodeCache local;
    EncodeCache& cc = cache ? *cache : local;
    cc.x = x;
    cc.h0 = nn::linear(x, embed_w, embed_b);
    cc.blocks.assign(enc_blocks.size(), {});
    cc.hs.clear();
    nn::Tensor h = cc.h0;
    for (std::size_t i = 0; i < enc_blocks.size(); ++i) {
      cc.hs.push_back(h);
      h = enc_blocks[i].forward(h, cond, cc.blocks[i]);
    }
    cc.hs.push_back(h);
    cc.pooled = nn::Tensor({1, cfg.d_model});
    for (std::size_t t = 0; t < cfg.seq_len; ++t)
      for (std::size_t c = 0; c < cfg.d_model; ++c)
        cc.pooled.v[c] += h.v[t * cfg.d_model + c];
    const double inv = 1.0 / static_cast<double>(cfg.seq_len);
    for (auto& v : cc.pooled.v) v *= inv;
    const nn::Tensor z2d = nn::linear(cc.pooled, to_latent_w, to_latent_b);
    return z2d.v;
  }

  // Accumulates parameter gradients; input gradients are discarded.
  void encode_backward(const std::vector<double>& dz, EncodeCache& cc,
                       const std::vector<double>& /*cond*/) {
    nn::Tensor dz2d({1, cfg.latent_dim});
    dz2d.v = dz;
    nn::Tensor dpooled = nn::linear_backward(cc.pooled, to_latent_w, to_latent_b, dz2d);
    nn::Tensor dh({cfg.seq_len, cfg.d_model});
    const double inv = 1.0 / static_cast<double>(cfg.seq_len);
    for (std::size_t t = 0; t < cfg.seq_len; ++t)
      for (std::size_t c = 0; c < cfg.d_model; ++c)
        dh.v[t * cfg.d_model + c] = dpooled.v[c] * inv;
    for (std::size_t i = enc_blocks.size(); i-- > 0;)
      dh = enc_blocks[i].backward(dh, cc.blocks[i]);
    nn::linear_backward(cc.x, embed_w, embed_b, dh);
  }

  struct DecodeCache {
    nn::Tensor z2d;  // {1, latent}
    nn::Tensor h0;
    std::vector<TimesBlock::Cache> blocks;
    std::vector<nn::Tensor> hs;
  };

  nn::Tensor decode(const std::vector<double>& z, const std::vector<double>& cond,
                    DecodeCache* cache = nullptr) {
    if (z.size() != cfg.latent_dim)
      throw ShapeError("decode: latent size mismatch");
    if (cond.size() != cfg.n_stations)
      throw ShapeError("decode: condition length mismatch");
    DecodeCache local;
    DecodeCache& cc = cache ? *cache : local;
    cc.z2d = nn::Tensor({1, cfg.latent_dim});
    cc.z2d.v = z;
    const nn::Tensor base = nn::linear(cc.z2d, from_latent_w, from_latent_b);
    cc.h0 = nn::Tensor({cfg.seq_len, cfg.d_model});
    for (std::size_t t = 0; t < cfg.seq_len; ++t)
      for (std::size_t c = 0; c < cfg.d_model; ++c)
        cc.h0.v[t * cfg.d_model + c] = base.v[c] + pos_emb.v[t * cfg.d_model + c];
    cc.blocks.assign(dec_blocks.size(), {});
    cc.hs.clear();
    nn::Tensor h = cc.h0;
    for (std::size_t i = 0; i < dec_blocks.size(); ++i) {
      cc.hs.push_back(h);
      h = dec_blocks[i].forward(h, cond, cc.blocks[i]);
    }
    cc.hs.push_back(h);
    return nn::linear(h, head_w, head_b);
  }

  std::vector<double> decode_backward(const nn::Tensor& dy, DecodeCache& cc) {
    nn::Tensor dh = nn::linear_backward(cc.hs.back(), head_w, head_b, dy);
    for (std::size_t i = dec_blocks.size(); i-- > 0;)
      dh = dec_blocks[i].backward(dh, cc.blocks[i]);
    pos_emb.ensure_grad();
    nn::Tensor dbase({1, cfg.d_model});
    for (std::size_t t = 0; t < cfg.seq_len; ++t)
      for (std::size_t c = 0; c < cfg.d_model; ++c) {
        pos_emb.g[t * cfg.d_model + c] += dh.v[t * cfg.d_model + c];
        dbase.v[c] += dh.v[t * cfg.d_model + c];
      }
    const nn::Tensor dz2d =
        nn::linear_backward(cc.z2d, from_latent_w, from_latent_b, dbase);
    return dz2d.v;
  }
};

}  // namespace smgen
