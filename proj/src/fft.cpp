#include "ssvep/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ssvep {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative Cooley-Tukey, power-of-two length, decimation in time.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

// Bluestein chirp transform for arbitrary length, built on fft_pow2.
void fft_bluestein(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  const std::size_t m = next_pow2(2 * n - 1);
  const double sign = inverse ? 1.0 : -1.0;

  // chirp[k] = exp(sign * i*pi*k^2/n), with k^2 reduced mod 2n to keep the
  // angle argument small
  std::vector<std::complex<double>> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % (2 * n);
    const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }

  std::vector<std::complex<double>> fa(m, {0.0, 0.0});
  std::vector<std::complex<double>> fb(m, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * chirp[k];
  for (std::size_t k = 0; k < n; ++k) {
    fb[k] = std::conj(chirp[k]);
    if (k != 0) fb[m - k] = std::conj(chirp[k]);
  }
  fft_pow2(fa, false);
  fft_pow2(fb, false);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  fft_pow2(fa, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * chirp[k];
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  if (a.empty()) throw std::invalid_argument("fft: empty input");
  if (a.size() == 1) return;
  if (is_pow2(a.size()))
    fft_pow2(a, inverse);
  else
    fft_bluestein(a, inverse);
}

ComplexSpectrum fft_forward(std::span<const double> signal, std::size_t pad_to, double fs_hz) {
  if (signal.empty()) throw std::invalid_argument("fft_forward: empty signal");
  if (pad_to < signal.size()) throw std::invalid_argument("fft_forward: pad_to < signal length");
  std::vector<std::complex<double>> a(pad_to, {0.0, 0.0});
  for (std::size_t i = 0; i < signal.size(); ++i) a[i] = {signal[i], 0.0};
  fft_inplace(a, false);

  ComplexSpectrum s;
  s.fs_hz = fs_hz;
  s.n_time = pad_to;
  s.bins.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(pad_to / 2 + 1));
  s.bins.front() = {s.bins.front().real(), 0.0};
  if (pad_to % 2 == 0) s.bins.back() = {s.bins.back().real(), 0.0};
  return s;
}

std::vector<double> ifft_inverse(const ComplexSpectrum& s) {
  if (s.bins.empty() || s.n_time == 0) throw std::invalid_argument("ifft_inverse: empty spectrum");
  if (s.bins.size() != s.n_time / 2 + 1)
    throw std::invalid_argument("ifft_inverse: bin count does not match n_time");
  std::vector<std::complex<double>> a(s.n_time);
  for (std::size_t k = 0; k < s.bins.size(); ++k) a[k] = s.bins[k];
  for (std::size_t k = s.bins.size(); k < s.n_time; ++k) a[k] = std::conj(a[s.n_time - k]);
  fft_inplace(a, true);
  std::vector<double> out(s.n_time);
  for (std::size_t i = 0; i < s.n_time; ++i) out[i] = a[i].real();
  return out;
}

std::vector<double> amplitude_spectrum(const ComplexSpectrum& s) {
  std::vector<double> out(s.bins.size());
  for (std::size_t k = 0; k < s.bins.size(); ++k) out[k] = std::abs(s.bins[k]);
  return out;
}

std::size_t dominant_bin(const ComplexSpectrum& s, double lo_hz, double hi_hz) {
  if (hi_hz < 0.0) hi_hz = s.fs_hz / 2.0;
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < s.bins.size(); ++k) {
    const double f = s.bin_hz(k);
    if (f < lo_hz || f > hi_hz) continue;
    const double mag = std::abs(s.bins[k]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  if (best_mag < 0.0) throw std::invalid_argument("dominant_bin: empty search band");
  return best;
}

}  // namespace ssvep
