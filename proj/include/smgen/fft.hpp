#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "smgen/errors.hpp"

namespace smgen::fft {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative Cooley-Tukey for power-of-two sizes.
// inverse == true applies the conjugate transform and the 1/n scale.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                       (inverse ? 1.0 : -1.0);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

// Bluestein chirp-z: DFT of arbitrary size as a circular convolution of
// power-of-two length. k*k is reduced mod 2n before the angle is formed to
// keep the chirp argument small.
inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) %
                             (2 * static_cast<std::uint64_t>(n));
    const double ang = std::numbers::pi * static_cast<double>(k2) /
                       static_cast<double>(n) * (inverse ? 1.0 : -1.0);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }

  std::vector<cplx> u(m, cplx(0.0, 0.0));
  std::vector<cplx> v(m, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
  v[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    v[k] = std::conj(chirp[k]);
    v[m - k] = std::conj(chirp[k]);
  }
  fft_pow2(u, false);
  fft_pow2(v, false);
  for (std::size_t k = 0; k < m; ++k) u[k] *= v[k];
  fft_pow2(u, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * chirp[k];
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

inline void fft(std::vector<cplx>& a, bool inverse = false) {
  if (is_pow2(a.size()))
    fft_pow2(a, inverse);
  else
    fft_bluestein(a, inverse);
}

// One-sided spectrum of a real series: bins 0..floor(n/2).
inline std::vector<cplx> rfft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<cplx> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = cplx(x[i], 0.0);
  fft(a, false);
  a.resize(n / 2 + 1);
  return a;
}

// Inverse of rfft for a real series of length n (hermitian completion).
inline std::vector<double> irfft(const std::vector<cplx>& half, std::size_t n) {
  if (half.size() != n / 2 + 1)
    throw ShapeError("irfft: expected " + std::to_string(n / 2 + 1) +
                     " one-sided bins, got " + std::to_string(half.size()));
  std::vector<cplx> a(n);
  for (std::size_t k = 0; k < half.size(); ++k) a[k] = half[k];
  for (std::size_t k = half.size(); k < n; ++k) a[k] = std::conj(a[n - k]);
  fft(a, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace smgen::fft
