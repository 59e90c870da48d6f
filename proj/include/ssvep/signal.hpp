#pragma once

#include <cstdint>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

// Synthesizes one SSVEP epoch: channel c, sample t gets
//   gains[c] * sum_h amps[h] * sin(2*pi*(h+1)*f*t/fs + (h+1)*phase) + N(0, sigma).
// Harmonic phases follow the base phase as h*phase. Deterministic for a
// fixed seed; noise draws are channel-major.
Epoch generate_ssvep(const StimulusSpec& spec, const std::vector<double>& harmonic_amps,
                     double fs_hz, double duration_s, std::size_t n_channels,
                     double noise_sigma, const std::vector<double>& channel_gains,
                     std::uint64_t seed, std::uint32_t trial_id = 0);

// Default 1/h harmonic rolloff for the synthetic generator.
std::vector<double> default_harmonic_amps(std::size_t n_harmonics);

// Zero-phase Chebyshev-I bandpass over every channel. Stopband edges sit at
// (lo-2, hi+10) Hz and the order is the minimum reaching gstop_db there with
// 0.5 dB passband ripple.
Epoch chebyshev_bandpass(const Epoch& e, double lo_hz = 7.0, double hi_hz = 70.0,
                         double gstop_db = 40.0);

// Zero-phase 50 Hz power-line notch. Requires fs > 100 Hz.
Epoch notch_50hz(const Epoch& e, double q = 35.0);

// Drops floor(t_discard_s*fs) leading samples from every channel.
Epoch discard_head(const Epoch& e, double t_discard_s);

// All windows of win_s seconds advanced by stride_s; both are converted to
// sample counts once, so the count is exactly
// (n_samples - win_samples)/stride_samples + 1. Windows inherit stimulus and
// trial id.
std::vector<Epoch> sliding_windows(const Epoch& e, double win_s, double stride_s);

std::size_t sliding_window_count(std::size_t n_samples, double fs_hz, double win_s,
                                 double stride_s);

// Root mean square of one row.
double rms(std::span<const double> x);

// Pearson correlation of two equal-length vectors.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace ssvep
