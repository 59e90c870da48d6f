#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "ssvep/emd.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/types.hpp"

namespace ssvep::cstl {

// Harmonic frequencies h*base_hz (h = 1..n) clipped to the analysis band,
// with per-harmonic phases h*theta taken from the frequency table when the
// base frequency is listed there.
struct HarmonicSet {
  double base_hz = 0.0;
  std::vector<double> members;
  std::vector<double> phases;
  bool phases_from_table = false;
};

struct ExchangeConfig {
  double g_source = 0.0;  // gain kept on the source harmonic bins
  double g_target = 1.0;  // gain of the injected target component
  double bin_halfwidth_hz = 0.5;
  std::size_t k_lo = 1, k_hi = 3;  // 1-based IMF range used for reconstruction
  double band_lo_hz = 7.0, band_hi_hz = 70.0;
  std::size_t n_harmonics = 4;
  // amplitude/phase readout uses the padded spectrum at this resolution
  double readout_resolution_hz = 0.25;
  // IMFs in range whose dominant peak falls outside this gate pass through
  // the reconstruction unexchanged
  double imf_gate_lo_hz = 6.0, imf_gate_hi_hz = 70.0;
  emd::SiftParams sift;
};

HarmonicSet harmonic_set(double base_hz, std::size_t n_harmonics, double band_lo_hz,
                         double band_hi_hz, const FrequencyTable& phase_table);

// Complex spectral content per harmonic: the sum of bins within
// +-halfwidth_hz of each member. (freq, content) pairs in member order.
std::vector<std::pair<double, std::complex<double>>> extract_harmonic_bins(
    const ComplexSpectrum& spec, const HarmonicSet& hs, double halfwidth_hz);

// The frequency-exchange operator on one IMF: source harmonic bands are
// scaled by g_source in place and a component of amplitude
// g_target * A(source harmonic) is injected at each target harmonic with the
// target phase (or the measured source phase when the table gives none).
// Everything outside the touched bins is preserved and the output is real.
std::vector<double> frequency_exchange(std::span<const double> imf, double fs_hz,
                                       const HarmonicSet& src, const HarmonicSet& tgt,
                                       const ExchangeConfig& cfg);

// Full transfer of one epoch to a target stimulus: per channel, sift into
// IMFs, exchange the IMFs in cfg's range, and sum them back.
Epoch reconstruct_target(const Epoch& e, const StimulusSpec& target, const ExchangeConfig& cfg,
                         const FrequencyTable& table);

// Same, reusing an existing channel decomposition of e.
Epoch reconstruct_target_from_imfs(const Epoch& e, const std::vector<emd::IMFSet>& channels,
                                   const StimulusSpec& target, const ExchangeConfig& cfg,
                                   const FrequencyTable& table);

// Source epochs verbatim plus one reconstruction of every epoch to every
// other class in the table. source_classes guards against epochs from
// outside the declared source set. Reconstructions are ordered by
// (source position, target class); jobs fan out in parallel.
std::vector<Epoch> build_training_set(const std::vector<Epoch>& source_epochs,
                                      const FrequencyTable& table,
                                      const std::vector<int>& source_classes,
                                      const ExchangeConfig& cfg, Exec exec = default_exec());

// Plain-loop reference for the fan-out above.
std::vector<Epoch> build_training_set_serial(const std::vector<Epoch>& source_epochs,
                                             const FrequencyTable& table,
                                             const std::vector<int>& source_classes,
                                             const ExchangeConfig& cfg);

// Pearson correlation of the two epochs' concatenated per-channel amplitude
// spectra, restricted to [lo_hz, hi_hz].
double spectral_pcc(const Epoch& a, const Epoch& b, double lo_hz, double hi_hz);

}  // namespace ssvep::cstl
