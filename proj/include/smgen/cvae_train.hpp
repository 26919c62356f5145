#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "smgen/cvae.hpp"
#include "smgen/rng.hpp"

namespace smgen {

struct CvaeExample {
  nn::Tensor x;        // {6, H, W} spectrogram tensor in [0,1]
  int class_idx = -1;  // station class; -1 in the unconditioned phase
};

// Unconditioned VAE pretraining with the standard N(0, I) prior.
inline std::vector<double> cvae_train_phase0(CvaeModel& model,
                                             const std::vector<CvaeExample>& data,
                                             std::size_t epochs, double lr,
                                             std::uint64_t seed) {
  if (data.empty()) throw ConfigError("cvae_train_phase0: empty training set");
  auto params = model.parameters();
  nn::AdamState opt;
  opt.lr = lr;
  Rng rng(seed);
  const std::vector<double> mu_p(model.cfg.latent_dim, 0.0);
  std::vector<double> losses;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      CvaeModel::EncCache ec;
      CvaeModel::DecCache dc;
      std::vector<double> mu, logvar;
      model.encode(data[i].x, mu, logvar, &ec);
      const std::size_t L = mu.size();
      std::vector<double> sigma(L), sigma2(L), eps(L), z(L);
      for (std::size_t j = 0; j < L; ++j) {
        sigma2[j] = std::exp(logvar[j]);
        sigma[j] = std::sqrt(sigma2[j]);
        eps[j] = rng.normal();
        z[j] = mu[j] + sigma[j] * eps[j];
      }
      const nn::Tensor y = model.decode(z, &dc);
      double recon = 0.0;
      const double inv = 1.0 / static_cast<double>(y.v.size());
      nn::Tensor dy = y;
      for (std::size_t j = 0; j < y.v.size(); ++j) {
        const double diff = y.v[j] - data[i].x.v[j];
        recon += diff * diff * inv;
        dy.v[j] = 2.0 * diff * inv;
      }
      const double kl = kl_conditioned(mu, sigma2, mu_p);
      const double loss = recon + kl;
      if (!std::isfinite(loss))
        throw DivergenceError("cvae_train_phase0: non-finite loss");
      total += loss;
      const auto dz = model.decode_backward(y, dy, dc);
      std::vector<double> dmu(L), dlogvar(L);
      for (std::size_t j = 0; j < L; ++j) {
        dmu[j] = dz[j] + (mu[j] - mu_p[j]);
        dlogvar[j] = dz[j] * eps[j] * 0.5 * sigma[j] + 0.5 * (sigma2[j] - 1.0);
      }
      model.encode_backward(dmu, dlogvar, ec);
      nn::adam_step(params, opt);
      nn::zero_grads(params);
    }
    losses.push_back(total / static_cast<double>(data.size()));
  }
  return losses;
}

// First conditioning sub-phase: one-hot tiled class priors in the KL term.
inline std::vector<double> cvae_train_phase1a(CvaeModel& model,
                                              const std::vector<CvaeExample>& data,
                                              std::size_t epochs, double lr,
                                              std::uint64_t seed) {
  if (data.empty()) throw ConfigError("cvae_train_phase1a: empty training set");
  for (const auto& ex : data)
    if (ex.class_idx < 0 || ex.class_idx >= static_cast<int>(model.cfg.n_classes))
      throw ConfigError("cvae_train_phase1a: example without a valid class");
  auto params = model.parameters();
  nn::AdamState opt;
  opt.lr = lr;
  Rng rng(seed);
  std::vector<std::vector<double>> priors;
  for (std::size_t c = 0; c < model.cfg.n_classes; ++c)
    priors.push_back(class_prior_mean(model.cfg.latent_dim, model.cfg.n_classes, c));
  std::vector<double> losses;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& mu_p = priors[data[i].class_idx];
      CvaeModel::EncCache ec;
      CvaeModel::DecCache dc;
      std::vector<double> mu, logvar;
      model.encode(data[i].x, mu, logvar, &ec);
      const std::size_t L = mu.size();
      std::vector<double> sigma(L), sigma2(L), eps(L), z(L);
      for (std::size_t j = 0; j < L; ++j) {
        sigma2[j] = std::exp(logvar[j]);
        sigma[j] = std::sqrt(sigma2[j]);
        eps[j] = rng.normal();
        z[j] = mu[j] + sigma[j] * eps[j];
      }
      const nn::Tensor y = model.decode(z, &dc);
      double recon = 0.0;
      const double inv = 1.0 / static_cast<double>(y.v.size());
      nn::Tensor dy = y;
      for (std::size_t j = 0; j < y.v.size(); ++j) {
        const double diff = y.v[j] - data[i].x.v[j];
        recon += diff * diff * inv;
        dy.v[j] = 2.0 * diff * inv;
      }
      const double loss = recon + kl_conditioned(mu, sigma2, mu_p);
      if (!std::isfinite(loss))
        throw DivergenceError("cvae_train_phase1a: non-finite loss");
      total += loss;
      const auto dz = model.decode_backward(y, dy, dc);
      std::vector<double> dmu(L), dlogvar(L);
      for (std::size_t j = 0; j < L; ++j) {
        dmu[j] = dz[j] + (mu[j] - mu_p[j]);
        dlogvar[j] = dz[j] * eps[j] * 0.5 * sigma[j] + 0.5 * (sigma2[j] - 1.0);
      }
      model.encode_backward(dmu, dlogvar, ec);
      nn::adam_step(params, opt);
      nn::zero_grads(params);
    }
    losses.push_back(total / static_cast<double>(data.size()));
  }
  return losses;
}

struct Phase1bResult {
  std::vector<double> cluster_loss_per_refresh;  // mean KL(p||q) at each refresh
  std::vector<std::vector<double>> centers;      // fixed cluster centers
};

namespace detail {

inline std::vector<double> clean_mu(CvaeModel& model, const nn::Tensor& x) {
  std::vector<double> mu, logvar;
  model.encode(x, mu, logvar);
  return mu;
}

// d KL(p || q(mu)) / d mu for one sample with fixed targets and centers.
inline std::vector<double> cluster_grad_mu(
    const std::vector<double>& mu, const std::vector<std::vector<double>>& centers,
    const std::vector<double>& p) {
  const std::size_t s = centers.size();
  std::vector<double> sraw(s);
  double stotal = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double d = mu[i] - centers[j][i];
      d2 += d * d;
    }
    sraw[j] = 1.0 / (1.0 + d2);
    stotal += sraw[j];
  }
  std::vector<double> dmu(mu.size(), 0.0);
  for (std::size_t m = 0; m < s; ++m) {
    const double qm = sraw[m] / stotal;
    const double dl_ds = (1.0 - p[m] / std::max(qm, 1e-12)) / stotal;
    const double coeff = dl_ds * (-2.0) * sraw[m] * sraw[m];
    for (std::size_t i = 0; i < mu.size(); ++i)
      dmu[i] += coeff * (mu[i] - centers[m][i]);
  }
  return dmu;
}

}  // namespace detail

// Second conditioning sub-phase: class priors stay frozen, cluster centers
// are initialized as per-class latent means and kept fixed, and the soft
// assignments / sharpened targets are refreshed every refresh_interval
// optimizer steps while the composite objective is minimized.
inline Phase1bResult cvae_train_phase1b(CvaeModel& model,
                                        const std::vector<CvaeExample>& data,
                                        std::size_t epochs, double lr,
                                        std::uint64_t seed) {
  if (data.empty()) throw ConfigError("cvae_train_phase1b: empty training set");
  const std::size_t s = model.cfg.n_classes;
  std::vector<std::size_t> class_counts(s, 0);
  for (const auto& ex : data) {
    if (ex.class_idx < 0 || ex.class_idx >= static_cast<int>(s))
      throw ConfigError("cvae_train_phase1b: example without a valid class");
    ++class_counts[ex.class_idx];
  }
  for (std::size_t c = 0; c < s; ++c)
    if (class_counts[c] == 0)
      throw ConfigError("cvae_train_phase1b: class " + std::to_string(c) +
                        " has no examples");

  Phase1bResult result;
  result.centers.assign(s, std::vector<double>(model.cfg.latent_dim, 0.0));
  std::vector<std::vector<double>> mus(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    mus[i] = detail::clean_mu(model, data[i].x);
    for (std::size_t j = 0; j < mus[i].size(); ++j)
      result.centers[data[i].class_idx][j] += mus[i][j];
  }
  for (std::size_t c = 0; c < s; ++c)
    for (auto& v : result.centers[c]) v /= static_cast<double>(class_counts[c]);

  std::vector<std::vector<double>> q(data.size()), p;
  auto refresh = [&]() {
    for (std::size_t i = 0; i < data.size(); ++i) {
      mus[i] = detail::clean_mu(model, data[i].x);
      q[i] = cluster_membership(mus[i], result.centers);
    }
    p = sharpen_targets(q);
    result.cluster_loss_per_refresh.push_back(cluster_kl(p, q) /
                                              static_cast<double>(data.size()));
  };
  refresh();

  auto params = model.parameters();
  nn::AdamState opt;
  opt.lr = lr;
  Rng rng(seed);
  std::vector<std::vector<double>> priors;
  for (std::size_t c = 0; c < s; ++c)
    priors.push_back(class_prior_mean(model.cfg.latent_dim, s, c));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const auto& mu_p = priors[data[i].class_idx];
      CvaeModel::EncCache ec;
      CvaeModel::DecCache dc;
      std::vector<double> mu, logvar;
      model.encode(data[i].x, mu, logvar, &ec);
      const std::size_t L = mu.size();
      std::vector<double> sigma(L), sigma2(L), eps(L), z(L);
      for (std::size_t j = 0; j < L; ++j) {
        sigma2[j] = std::exp(logvar[j]);
        sigma[j] = std::sqrt(sigma2[j]);
        eps[j] = rng.normal();
        z[j] = mu[j] + sigma[j] * eps[j];
      }
      const nn::Tensor y = model.decode(z, &dc);
      const double inv = 1.0 / static_cast<double>(y.v.size());
      nn::Tensor dy = y;
      double recon = 0.0;
      for (std::size_t j = 0; j < y.v.size(); ++j) {
        const double diff = y.v[j] - data[i].x.v[j];
        recon += diff * diff * inv;
        dy.v[j] = 2.0 * diff * inv;
      }
      const double loss = recon + kl_conditioned(mu, sigma2, mu_p);
      if (!std::isfinite(loss))
        throw DivergenceError("cvae_train_phase1b: non-finite loss");
      const auto dz = model.decode_backward(y, dy, dc);
      const auto dmu_cluster =
          detail::cluster_grad_mu(mu, result.centers, p[i]);
      std::vector<double> dmu(L), dlogvar(L);
      for (std::size_t j = 0; j < L; ++j) {
        dmu[j] = dz[j] + (mu[j] - mu_p[j]) +
                 model.cfg.cluster_weight * dmu_cluster[j];
        dlogvar[j] = dz[j] * eps[j] * 0.5 * sigma[j] + 0.5 * (sigma2[j] - 1.0);
      }
      model.encode_backward(dmu, dlogvar, ec);
      nn::adam_step(params, opt);
      nn::zero_grads(params);
      if (++steps % model.cfg.refresh_interval == 0) refresh();
    }
  }
  refresh();
  return result;
}

// Generation draws the latent from the class prior N(mu_p, I); noise off
// decodes the class prototype mu_p itself.
inline nn::Tensor cvae_sample_prior(CvaeModel& model, std::size_t class_idx,
                                    Rng& rng, bool with_noise = true) {
  auto z = class_prior_mean(model.cfg.latent_dim, model.cfg.n_classes, class_idx);
  if (with_noise)
    for (auto& v : z) v += rng.normal();
  return model.decode(z);
}

// Deterministic reconstruction through the latent mean.
inline nn::Tensor cvae_reconstruct(CvaeModel& model, const nn::Tensor& x) {
  std::vector<double> mu, logvar;
  model.encode(x, mu, logvar);
  return model.decode(mu);
}

}  // namespace smgen
