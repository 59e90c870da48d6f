#include "ssvep/signal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ssvep/filter_design.hpp"
#include "ssvep/rng.hpp"

namespace ssvep {

namespace {
constexpr double kPi = std::numbers::pi;

Epoch filter_per_channel(const Epoch& e, const SosFilter& f) {
  validate_epoch(e);
  Epoch out = e;
  for (std::size_t c = 0; c < e.n_channels(); ++c) {
    const auto y = f.filtfilt(e.data.row(c));
    auto dst = out.data.row(c);
    for (std::size_t i = 0; i < y.size(); ++i) dst[i] = y[i];
  }
  return out;
}
}  // namespace

void validate_epoch(const Epoch& e) {
  if (e.n_channels() < 1 || e.n_samples() < 2)
    throw std::invalid_argument("epoch: need >=1 channel and >=2 samples");
  if (!(e.fs_hz > 0.0) || !std::isfinite(e.fs_hz))
    throw std::invalid_argument("epoch: bad sampling rate");
  for (double v : e.data.values())
    if (!std::isfinite(v)) throw std::invalid_argument("epoch: non-finite sample");
}

Epoch generate_ssvep(const StimulusSpec& spec, const std::vector<double>& harmonic_amps,
                     double fs_hz, double duration_s, std::size_t n_channels,
                     double noise_sigma, const std::vector<double>& channel_gains,
                     std::uint64_t seed, std::uint32_t trial_id) {
  if (harmonic_amps.empty()) throw std::invalid_argument("generate_ssvep: no harmonic amplitudes");
  if (n_channels == 0) throw std::invalid_argument("generate_ssvep: zero channels");
  if (channel_gains.size() != n_channels)
    throw std::invalid_argument("generate_ssvep: channel_gains length mismatch");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("generate_ssvep: negative noise sigma");
  if (!std::isfinite(spec.freq_hz) || !std::isfinite(spec.phase_rad) || !std::isfinite(fs_hz) ||
      !std::isfinite(duration_s))
    throw std::invalid_argument("generate_ssvep: non-finite input");
  const double f_max = spec.freq_hz * static_cast<double>(harmonic_amps.size());
  if (fs_hz < 2.0 * f_max)
    throw std::invalid_argument("generate_ssvep: fs below Nyquist for highest harmonic");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
  if (n < 2) throw std::invalid_argument("generate_ssvep: fewer than 2 samples");

  Epoch e;
  e.fs_hz = fs_hz;
  e.stimulus = spec;
  e.trial_id = trial_id;
  e.data = Matrix(n_channels, n);

  Rng rng(seed, "generate_ssvep");
  for (std::size_t c = 0; c < n_channels; ++c) {
    auto row = e.data.row(c);
    for (std::size_t t = 0; t < n; ++t) {
      double v = 0.0;
      for (std::size_t h = 0; h < harmonic_amps.size(); ++h) {
        const double order = static_cast<double>(h + 1);
        v += harmonic_amps[h] *
             std::sin(2.0 * kPi * order * spec.freq_hz * static_cast<double>(t) / fs_hz +
                      order * spec.phase_rad);
      }
      v *= channel_gains[c];
      if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
      row[t] = v;
    }
  }
  return e;
}

std::vector<double> default_harmonic_amps(std::size_t n_harmonics) {
  std::vector<double> amps(n_harmonics);
  for (std::size_t h = 0; h < n_harmonics; ++h) amps[h] = 1.0 / static_cast<double>(h + 1);
  return amps;
}

Epoch chebyshev_bandpass(const Epoch& e, double lo_hz, double hi_hz, double gstop_db) {
  if (!(0.0 < lo_hz && lo_hz < hi_hz && hi_hz < e.fs_hz / 2.0))
    throw std::invalid_argument("chebyshev_bandpass: need 0 < lo < hi < fs/2");
  const SosFilter f =
      design_cheby1_bandpass(lo_hz, hi_hz, lo_hz - 2.0, hi_hz + 10.0, e.fs_hz, gstop_db);
  return filter_per_channel(e, f);
}

Epoch notch_50hz(const Epoch& e, double q) {
  if (!(e.fs_hz > 100.0)) throw std::invalid_argument("notch_50hz: fs must exceed 100 Hz");
  return filter_per_channel(e, design_notch(50.0, q, e.fs_hz));
}

Epoch discard_head(const Epoch& e, double t_discard_s) {
  validate_epoch(e);
  if (t_discard_s < 0.0) throw std::invalid_argument("discard_head: negative discard");
  const auto drop = static_cast<std::size_t>(std::floor(t_discard_s * e.fs_hz + 1e-9));
  if (drop >= e.n_samples())
    throw std::invalid_argument("discard_head: discard reaches epoch end");
  Epoch out;
  out.fs_hz = e.fs_hz;
  out.stimulus = e.stimulus;
  out.trial_id = e.trial_id;
  out.data = Matrix(e.n_channels(), e.n_samples() - drop);
  for (std::size_t c = 0; c < e.n_channels(); ++c) {
    const auto src = e.data.row(c);
    auto dst = out.data.row(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i + drop];
  }
  return out;
}

std::size_t sliding_window_count(std::size_t n_samples, double fs_hz, double win_s,
                                 double stride_s) {
  const auto win_n = static_cast<std::size_t>(std::llround(win_s * fs_hz));
  const auto stride_n = static_cast<std::size_t>(std::llround(stride_s * fs_hz));
  if (stride_n == 0) throw std::invalid_argument("sliding_windows: stride too small");
  if (win_n == 0 || win_n > n_samples)
    throw std::invalid_argument("sliding_windows: window longer than epoch");
  return (n_samples - win_n) / stride_n + 1;
}

std::vector<Epoch> sliding_windows(const Epoch& e, double win_s, double stride_s) {
  validate_epoch(e);
  const auto win_n = static_cast<std::size_t>(std::llround(win_s * e.fs_hz));
  const auto stride_n = static_cast<std::size_t>(std::llround(stride_s * e.fs_hz));
  const std::size_t count = sliding_window_count(e.n_samples(), e.fs_hz, win_s, stride_s);

  std::vector<Epoch> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    Epoch win;
    win.fs_hz = e.fs_hz;
    win.stimulus = e.stimulus;
    win.trial_id = e.trial_id;
    win.data = Matrix(e.n_channels(), win_n);
    const std::size_t start = w * stride_n;
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      const auto src = e.data.row(c);
      auto dst = win.data.row(c);
      for (std::size_t i = 0; i < win_n; ++i) dst[i] = src[start + i];
    }
    out.push_back(std::move(win));
  }
  return out;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson: need equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw std::invalid_argument("pearson: zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace ssvep
