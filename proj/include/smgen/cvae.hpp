#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "smgen/checkpoint.hpp"
#include "smgen/errors.hpp"
#include "smgen/nn.hpp"
#include "smgen/rng.hpp"

namespace smgen {

struct VaeConfig {
  std::size_t in_ch = 6;
  std::size_t height = 43;  // spectrogram frames
  std::size_t width = 129;  // spectrogram bins
  std::vector<std::size_t> channels = {16, 32, 32, 32};
  std::size_t latent_dim = 510;
  std::size_t n_classes = 5;
  double cluster_weight = 100.0;   // a in the composite objective
  std::size_t refresh_interval = 50;  // optimizer steps between (q,p) refreshes

  void validate() const {
    if (channels.empty()) throw ConfigError("cvae: need at least one conv layer");
    if (n_classes < 1) throw ConfigError("cvae: n_classes must be >= 1");
    if (latent_dim % n_classes != 0)
      throw ConfigError("cvae: latent_dim must be a multiple of n_classes");
    if (height < 1 || width < 1 || in_ch < 1)
      throw ConfigError("cvae: bad input shape");
    if (cluster_weight < 0.0) throw ConfigError("cvae: cluster weight must be >= 0");
  }

  std::string digest_string() const {
    std::string s = "cvae;in=" + std::to_string(in_ch) + ";h=" +
                    std::to_string(height) + ";w=" + std::to_string(width) + ";ch=";
    for (auto c : channels) s += std::to_string(c) + "_";
    s += ";lat=" + std::to_string(latent_dim) + ";cls=" + std::to_string(n_classes);
    return s;
  }
  std::uint64_t digest() const { return fnv1a64(digest_string()); }
};

// Class prior: the one-hot pattern tiled across the latent dimensions
// (position i belongs to class i mod n_classes), prior variance fixed at 1.
inline std::vector<double> class_prior_mean(std::size_t latent_dim,
                                            std::size_t n_classes,
                                            std::size_t class_idx) {
  if (class_idx >= n_classes) throw ConfigError("class_prior_mean: bad class index");
  std::vector<double> mu(latent_dim, 0.0);
  for (std::size_t i = class_idx; i < latent_dim; i += n_classes) mu[i] = 1.0;
  return mu;
}

// 0.5 * sum(sigma_q^2 + (mu_q - mu_p)^2 - 1 - ln sigma_q^2) with unit prior
// variance.
inline double kl_conditioned(const std::vector<double>& mu_q,
                             const std::vector<double>& sigma_q2,
                             const std::vector<double>& mu_p) {
  if (mu_q.size() != sigma_q2.size() || mu_q.size() != mu_p.size())
    throw ShapeError("kl_conditioned: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_q.size(); ++i) {
    const double d = mu_q[i] - mu_p[i];
    acc += sigma_q2[i] + d * d - 1.0 - std::log(sigma_q2[i]);
  }
  return 0.5 * acc;
}

inline std::vector<double> reparameterize(const std::vector<double>& mu,
                                          const std::vector<double>& sigma,
                                          Rng& rng) {
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) z[i] = mu[i] + sigma[i] * rng.normal();
  return z;
}

// Student-t style soft assignment: q_j ~ (1 + |z - mu_j|^2)^-1, normalized.
inline std::vector<double> cluster_membership(
    const std::vector<double>& z, const std::vector<std::vector<double>>& centers) {
  if (centers.empty()) throw ShapeError("cluster_membership: no centers");
  std::vector<double> q(centers.size());
  double total = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - centers[j][i];
      d2 += d * d;
    }
    q[j] = 1.0 / (1.0 + d2);
    total += q[j];
  }
  for (auto& v : q) v /= total;
  return q;
}

// p_ij = (q_ij^2 / f_j) / sum_j (q_ij^2 / f_j), f_j = sum_i q_ij.
inline std::vector<std::vector<double>> sharpen_targets(
    const std::vector<std::vector<double>>& q) {
  if (q.empty()) throw ShapeError("sharpen_targets: empty batch");
  const std::size_t s = q.front().size();
  std::vector<double> f(s, 0.0);
  for (const auto& row : q)
    for (std::size_t j = 0; j < s; ++j) f[j] += row[j];
  std::vector<std::vector<double>> p(q.size(), std::vector<double>(s, 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      p[i][j] = q[i][j] * q[i][j] / f[j];
      norm += p[i][j];
    }
    for (std::size_t j = 0; j < s; ++j) p[i][j] /= norm;
  }
  return p;
}

// KL(p || q) over all rows; q is clamped at 1e-12 inside the log and p == 0
// terms contribute nothing.
inline double cluster_kl(const std::vector<std::vector<double>>& p,
                         const std::vector<std::vector<double>>& q) {
  if (p.size() != q.size()) throw ShapeError("cluster_kl: row count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p[i].size(); ++j)
      if (p[i][j] > 0.0)
        acc += p[i][j] * std::log(p[i][j] / std::max(q[i][j], 1e-12));
  return acc;
}

// Composite objective: L = (recon + kl) + a * KL(p || q).
inline double total_loss(double recon, double kl,
                         const std::vector<std::vector<double>>& p,
                         const std::vector<std::vector<double>>& q, double a) {
  if (a < 0.0) throw ConfigError("total_loss: weight a must be >= 0");
  return recon + kl + a * cluster_kl(p, q);
}

// ---------------------------------------------------------------------------
// Convolutional conditional VAE on 6-plane spectrogram tensors in [0,1].
// Encoder: stride-2 3x3 convolutions with leaky-ReLU, then linear heads for
// the mean and log-variance. Decoder mirrors with transposed convolutions
// and a sigmoid output.

struct CvaeModel {
  VaeConfig cfg;
  std::vector<nn::Tensor> enc_w, enc_b;
  nn::Tensor mu_w, mu_b, logvar_w, logvar_b;
  nn::Tensor dec_lin_w, dec_lin_b;
  std::vector<nn::Tensor> dec_w, dec_b;
  std::vector<std::size_t> hs, ws;  // spatial chain, hs[0] = input height
  std::size_t flat = 0;

  explicit CvaeModel(const VaeConfig& config, std::uint64_t init_seed = 1)
      : cfg(config) {
    cfg.validate();
    Rng rng(init_seed);
    hs = {cfg.height};
    ws = {cfg.width};
    std::size_t in_c = cfg.in_ch;
    for (auto out_c : cfg.channels) {
      nn::Tensor w({out_c, in_c, 3, 3});
      nn::xavier_init(w, in_c * 9, out_c * 9, rng);
      enc_w.push_back(std::move(w));
      enc_b.emplace_back(std::vector<std::size_t>{out_c});
      hs.push_back((hs.back() - 1) / 2 + 1);
      ws.push_back((ws.back() - 1) / 2 + 1);
      in_c = out_c;
    }
    flat = cfg.channels.back() * hs.back() * ws.back();
    mu_w = nn::Tensor({flat, cfg.latent_dim});
    nn::xavier_init(mu_w, flat, cfg.latent_dim, rng);
    mu_b = nn::Tensor({cfg.latent_dim});
    logvar_w = nn::Tensor({flat, cfg.latent_dim});
    nn::xavier_init(logvar_w, flat, cfg.latent_dim, rng);
    logvar_b = nn::Tensor({cfg.latent_dim});
    dec_lin_w = nn::Tensor({cfg.latent_dim, flat});
    nn::xavier_init(dec_lin_w, cfg.latent_dim, flat, rng);
    dec_lin_b = nn::Tensor({flat});
    for (std::size_t i = cfg.channels.size(); i-- > 0;) {
      const std::size_t cin = cfg.channels[i];
      const std::size_t cout = i == 0 ? cfg.in_ch : cfg.channels[i - 1];
      nn::Tensor w({cin, cout, 3, 3});
      nn::xavier_init(w, cin * 9, cout * 9, rng);
      dec_w.push_back(std::move(w));
      dec_b.emplace_back(std::vector<std::size_t>{cout});
    }
  }

  std::vector<std::pair<std::string, nn::Tensor*>> named_parameters() {
    std::vector<std::pair<std::string, nn::Tensor*>> out;
    for (std::size_t i = 0; i < enc_w.size(); ++i) {
      out.emplace_back("enc" + std::to_string(i) + ".w", &enc_w[i]);
      out.emplace_back("enc" + std::to_string(i) + ".b", &enc_b[i]);
    }
    out.emplace_back("mu.w", &mu_w);
    out.emplace_back("mu.b", &mu_b);
    out.emplace_back("logvar.w", &logvar_w);
    out.emplace_back("logvar.b", &logvar_b);
    out.emplace_back("dec_lin.w", &dec_lin_w);
    out.emplace_back("dec_lin.b", &dec_lin_b);
    for (std::size_t i = 0; i < dec_w.size(); ++i) {
      out.emplace_back("dec" + std::to_string(i) + ".w", &dec_w[i]);
      out.emplace_back("dec" + std::to_string(i) + ".b", &dec_b[i]);
    }
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

  struct EncCache {
    std::vector<nn::Tensor> inputs;    // input to each conv layer
    std::vector<nn::Tensor> pre_acts;  // conv outputs before leaky-ReLU
    nn::Tensor flat_act;               // {1, flat}
  };

  void encode(const nn::Tensor& x, std::vector<double>& mu,
              std::vector<double>& logvar, EncCache* cache = nullptr) {
    if (x.shape.size() != 3 || x.shape[0] != cfg.in_ch ||
        x.shape[1] != cfg.height || x.shape[2] != cfg.width)
      throw ShapeError("cvae encode: expected {" + std::to_string(cfg.in_ch) + "," +
                       std::to_string(cfg.height) + "," + std::to_string(cfg.width) +
                       "}, got " + nn::shape_str(x));
    EncCache local;
    EncCache& cc = cache ? *cache : local;
    cc.inputs.clear();
    cc.pre_acts.clear();
    nn::Tensor h = x;
    for (std::size_t i = 0; i < enc_w.size(); ++i) {
      cc.inputs.push_back(h);
      nn::Tensor pre = nn::conv2d(h, enc_w[i], enc_b[i], 2, 1);
      cc.pre_acts.push_back(pre);
      h = nn::map(pre, nn::leaky_relu);
    }
    cc.flat_act = nn::Tensor({1, flat});
    cc.flat_act.v = h.v;
    const nn::Tensor mu_t = nn::linear(cc.flat_act, mu_w, mu_b);
    const nn::Tensor lv_t = nn::linear(cc.flat_act, logvar_w, logvar_b);
    mu = mu_t.v;
    logvar = lv_t.v;
  }

  void encode_backward(const std::vector<double>& dmu,
                       const std::vector<double>& dlogvar, EncCache& cc) {
    nn::Tensor dmu_t({1, cfg.latent_dim});
    dmu_t.v = dmu;
    nn::Tensor dlv_t({1, cfg.latent_dim});
    dlv_t.v = dlogvar;
    nn::Tensor dflat = nn::linear_backward(cc.flat_act, mu_w, mu_b, dmu_t);
    const nn::Tensor dflat2 =
        nn::linear_backward(cc.flat_act, logvar_w, logvar_b, dlv_t);
    for (std::size_t i = 0; i < dflat.v.size(); ++i) dflat.v[i] += dflat2.v[i];
    nn::Tensor dh({cfg.channels.back(), hs.back(), ws.back()});
    dh.v = dflat.v;
    for (std::size_t i = enc_w.size(); i-- > 0;) {
      const nn::Tensor dpre =
          nn::map_backward(cc.pre_acts[i], dh, nn::leaky_relu_grad);
      dh = nn::conv2d_backward(cc.inputs[i], enc_w[i], enc_b[i], dpre, 2, 1);
    }
  }

  struct DecCache {
    nn::Tensor z2d;       // {1, latent}
    nn::Tensor lin_pre;   // {1, flat}, before leaky-ReLU
    std::vector<nn::Tensor> inputs;    // input to each transposed conv
    std::vector<nn::Tensor> pre_acts;  // transposed conv outputs pre-activation
  };

  nn::Tensor decode(const std::vector<double>& z, DecCache* cache = nullptr) {
    if (z.size() != cfg.latent_dim) throw ShapeError("cvae decode: latent mismatch");
    DecCache local;
    DecCache& cc = cache ? *cache : local;
    cc.z2d = nn::Tensor({1, cfg.latent_dim});
    cc.z2d.v = z;
    cc.lin_pre = nn::linear(cc.z2d, dec_lin_w, dec_lin_b);
    nn::Tensor h({cfg.channels.back(), hs.back(), ws.back()});
    for (std::size_t i = 0; i < h.v.size(); ++i)
      h.v[i] = nn::leaky_relu(cc.lin_pre.v[i]);
    cc.inputs.clear();
    cc.pre_acts.clear();
    const std::size_t n_layers = dec_w.size();
    for (std::size_t i = 0; i < n_layers; ++i) {
      // Layer i upsamples from chain level (n_layers - i) to (n_layers - i - 1).
      const std::size_t lvl = n_layers - i;
      const std::size_t oph = hs[lvl - 1] - (2 * hs[lvl] - 1);
      const std::size_t opw = ws[lvl - 1] - (2 * ws[lvl] - 1);
      cc.inputs.push_back(h);
      nn::Tensor pre = nn::conv_transpose2d(h, dec_w[i], dec_b[i], 2, 1, oph, opw);
      cc.pre_acts.push_back(pre);
      if (i + 1 < n_layers)
        h = nn::map(pre, nn::leaky_relu);
      else
        h = nn::map(pre, nn::sigmoid);
    }
    return h;
  }

  std::vector<double> decode_backward(const nn::Tensor& y, const nn::Tensor& dy,
                                      DecCache& cc) {
    const std::size_t n_layers = dec_w.size();
    nn::Tensor dh = dy;
    {
      // Sigmoid output layer: grad uses the forward output directly.
      nn::Tensor dpre = dh;
      for (std::size_t i = 0; i < dpre.v.size(); ++i)
        dpre.v[i] = dh.v[i] * nn::sigmoid_grad_from_y(y.v[i]);
      dh = nn::conv_transpose2d_backward(cc.inputs[n_layers - 1],
                                         dec_w[n_layers - 1], dec_b[n_layers - 1],
                                         dpre, 2, 1);
    }
    for (std::size_t i = n_layers - 1; i-- > 0;) {
      const nn::Tensor dpre =
          nn::map_backward(cc.pre_acts[i], dh, nn::leaky_relu_grad);
      dh = nn::conv_transpose2d_backward(cc.inputs[i], dec_w[i], dec_b[i], dpre, 2, 1);
    }
    nn::Tensor dlin({1, flat});
    for (std::size_t i = 0; i < flat; ++i)
      dlin.v[i] = dh.v[i] * nn::leaky_relu_grad(cc.lin_pre.v[i]);
    const nn::Tensor dz = nn::linear_backward(cc.z2d, dec_lin_w, dec_lin_b, dlin);
    return dz.v;
  }
};

}  // namespace smgen
