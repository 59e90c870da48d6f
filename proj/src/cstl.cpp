#include "ssvep/cstl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ssvep/fft.hpp"
#include "ssvep/signal.hpp"

namespace ssvep::cstl {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t readout_pad(std::size_t n, double fs_hz, double resolution_hz) {
  const auto want = static_cast<std::size_t>(std::ceil(fs_hz / resolution_hz));
  return std::max(n, want);
}

bool imf_in_gate(std::span<const double> imf, double fs_hz, const ExchangeConfig& cfg) {
  const auto spec = fft_forward(imf, imf.size(), fs_hz);
  double peak = 0.0;
  std::size_t peak_k = 0;
  for (std::size_t k = 1; k < spec.bins.size(); ++k) {
    const double m = std::abs(spec.bins[k]);
    if (m > peak) {
      peak = m;
      peak_k = k;
    }
  }
  if (peak <= 0.0) return false;
  const double f = spec.bin_hz(peak_k);
  return f >= cfg.imf_gate_lo_hz && f <= cfg.imf_gate_hi_hz;
}

}  // namespace

HarmonicSet harmonic_set(double base_hz, std::size_t n_harmonics, double band_lo_hz,
                         double band_hi_hz, const FrequencyTable& phase_table) {
  if (n_harmonics < 1) throw std::invalid_argument("harmonic_set: need at least one harmonic");
  if (!(base_hz >= band_lo_hz && base_hz <= band_hi_hz))
    throw std::invalid_argument("harmonic_set: base frequency outside band");

  HarmonicSet hs;
  hs.base_hz = base_hz;

  double base_phase = 0.0;
  for (const auto& e : phase_table.entries)
    if (std::abs(e.freq_hz - base_hz) < 1e-6 * std::max(1.0, base_hz)) {
      base_phase = e.phase_rad;
      hs.phases_from_table = true;
      break;
    }

  for (std::size_t h = 1; h <= n_harmonics; ++h) {
    const double f = base_hz * static_cast<double>(h);
    if (f > band_hi_hz) break;
    hs.members.push_back(f);
    hs.phases.push_back(static_cast<double>(h) * base_phase);
  }
  if (hs.members.empty()) throw std::invalid_argument("harmonic_set: empty member set");
  return hs;
}

std::vector<std::pair<double, std::complex<double>>> extract_harmonic_bins(
    const ComplexSpectrum& spec, const HarmonicSet& hs, double halfwidth_hz) {
  std::vector<std::pair<double, std::complex<double>>> out;
  const double nyq = spec.fs_hz / 2.0;
  for (double f : hs.members) {
    if (f >= nyq) throw std::invalid_argument("extract_harmonic_bins: harmonic above Nyquist");
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 1; k + 1 < spec.bins.size(); ++k)
      if (std::abs(spec.bin_hz(k) - f) <= halfwidth_hz) acc += spec.bins[k];
    out.emplace_back(f, acc);
  }
  return out;
}

std::vector<double> frequency_exchange(std::span<const double> imf, double fs_hz,
                                       const HarmonicSet& src, const HarmonicSet& tgt,
                                       const ExchangeConfig& cfg) {
  if (src.members.size() != tgt.members.size())
    throw std::invalid_argument("frequency_exchange: source/target harmonic counts differ");
  const std::size_t n_h = src.members.size();
  const double hw = cfg.bin_halfwidth_hz;

  // Amplitudes are read from the untouched input spectrum, then all source
  // bands are scaled, then all target components injected, so source/target
  // coincidences (e.g. 4*9 Hz = 3*12 Hz) stay well defined. What cannot be
  // allowed is a self-overlap: a bin scaled twice or two injections on the
  // same bin.
  for (std::size_t i = 0; i < n_h; ++i)
    for (std::size_t j = i + 1; j < n_h; ++j)
      if (std::abs(src.members[i] - src.members[j]) <= 2.0 * hw)
        throw std::invalid_argument(
            "frequency_exchange: halfwidth collision between source harmonics");

  const std::size_t n = imf.size();
  ComplexSpectrum spec = fft_forward(imf, n, fs_hz);
  for (std::size_t i = 0; i < n_h; ++i)
    for (std::size_t j = i + 1; j < n_h; ++j)
      if (spec.nearest_bin(tgt.members[i]) == spec.nearest_bin(tgt.members[j]))
        throw std::invalid_argument(
            "frequency_exchange: halfwidth collision between target harmonics");

  // amplitude/phase readout from the zero-padded spectrum, single nearest bin
  const std::size_t n_pad = readout_pad(n, fs_hz, cfg.readout_resolution_hz);
  const ComplexSpectrum fine = n_pad == n ? spec : fft_forward(imf, n_pad, fs_hz);
  std::vector<std::complex<double>> measured(n_h);
  for (std::size_t i = 0; i < n_h; ++i) {
    if (src.members[i] >= fs_hz / 2.0 || tgt.members[i] >= fs_hz / 2.0)
      throw std::invalid_argument("frequency_exchange: harmonic above Nyquist");
    measured[i] = fine.bins[fine.nearest_bin(src.members[i])];
  }

  for (std::size_t i = 0; i < n_h; ++i)
    for (std::size_t k = 1; k + 1 < spec.bins.size(); ++k)
      if (std::abs(spec.bin_hz(k) - src.members[i]) <= hw) spec.bins[k] *= cfg.g_source;

  for (std::size_t i = 0; i < n_h; ++i) {
    const std::size_t k = spec.nearest_bin(tgt.members[i]);
    if (k == 0 || k + 1 >= spec.bins.size())
      throw std::invalid_argument("frequency_exchange: target bin at DC or Nyquist");
    // realize g_target * A * sin(2*pi*f*t + theta); a sine of amplitude A
    // contributes A*n/2 * exp(i*(theta - pi/2)) to its positive bin
    if (tgt.phases_from_table) {
      const double theta = tgt.phases[i] - kPi / 2.0;
      spec.bins[k] += cfg.g_target * std::abs(measured[i]) *
                      std::complex<double>(std::cos(theta), std::sin(theta));
    } else {
      spec.bins[k] += cfg.g_target * measured[i];
    }
  }

  return ifft_inverse(spec);
}

Epoch reconstruct_target_from_imfs(const Epoch& e, const std::vector<emd::IMFSet>& channels,
                                   const StimulusSpec& target, const ExchangeConfig& cfg,
                                   const FrequencyTable& table) {
  if (channels.size() != e.n_channels())
    throw std::invalid_argument("reconstruct_target: decomposition/channel count mismatch");
  const StimulusSpec& src_spec = table.by_class(e.stimulus.class_index);
  if (std::abs(src_spec.freq_hz - e.stimulus.freq_hz) > 1e-3)
    throw std::invalid_argument("reconstruct_target: epoch frequency not in table");

  HarmonicSet src =
      harmonic_set(src_spec.freq_hz, cfg.n_harmonics, cfg.band_lo_hz, cfg.band_hi_hz, table);
  HarmonicSet tgt =
      harmonic_set(target.freq_hz, cfg.n_harmonics, cfg.band_lo_hz, cfg.band_hi_hz, table);
  const std::size_t n_h = std::min(src.members.size(), tgt.members.size());
  src.members.resize(n_h);
  src.phases.resize(n_h);
  tgt.members.resize(n_h);
  tgt.phases.resize(n_h);

  Epoch out;
  out.fs_hz = e.fs_hz;
  out.stimulus = target;
  out.trial_id = e.trial_id;
  out.data = Matrix(e.n_channels(), e.n_samples());

  for (std::size_t c = 0; c < e.n_channels(); ++c) {
    const emd::IMFSet& set = channels[c];
    const std::size_t hi = std::min(cfg.k_hi, set.count());
    std::vector<double> acc(e.n_samples(), 0.0);
    for (std::size_t k = cfg.k_lo; k <= hi; ++k) {
      const std::vector<double>& imf = set.imfs[k - 1];
      if (imf_in_gate(imf, e.fs_hz, cfg)) {
        const auto x = frequency_exchange(imf, e.fs_hz, src, tgt, cfg);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
      } else {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += imf[i];
      }
    }
    auto row = out.data.row(c);
    for (std::size_t i = 0; i < acc.size(); ++i) row[i] = acc[i];
  }
  return out;
}

Epoch reconstruct_target(const Epoch& e, const StimulusSpec& target, const ExchangeConfig& cfg,
                         const FrequencyTable& table) {
  const auto channels = emd::decompose_epoch(e, cfg.sift, Exec::serial);
  return reconstruct_target_from_imfs(e, channels, target, cfg, table);
}

namespace {

std::vector<Epoch> build_training_set_impl(const std::vector<Epoch>& source_epochs,
                                           const FrequencyTable& table,
                                           const std::vector<int>& source_classes,
                                           const ExchangeConfig& cfg, Exec exec, bool serial) {
  if (source_epochs.empty()) throw std::invalid_argument("build_training_set: empty source set");
  table.validate();
  for (const Epoch& e : source_epochs)
    if (std::find(source_classes.begin(), source_classes.end(), e.stimulus.class_index) ==
        source_classes.end())
      throw std::invalid_argument("build_training_set: epoch class outside declared source set");

  struct Job {
    std::size_t epoch_index;
    StimulusSpec target;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < source_epochs.size(); ++i)
    for (const auto& entry : table.entries)
      if (entry.class_index != source_epochs[i].stimulus.class_index)
        jobs.push_back({i, entry});
  // reconstructed block ordered by (source trial id, source class, target
  // class) so the output does not depend on the caller's epoch order
  std::stable_sort(jobs.begin(), jobs.end(), [&](const Job& a, const Job& b) {
    const Epoch& ea = source_epochs[a.epoch_index];
    const Epoch& eb = source_epochs[b.epoch_index];
    if (ea.trial_id != eb.trial_id) return ea.trial_id < eb.trial_id;
    if (ea.stimulus.class_index != eb.stimulus.class_index)
      return ea.stimulus.class_index < eb.stimulus.class_index;
    return a.target.class_index < b.target.class_index;
  });

  // one decomposition per source epoch, shared by all of its targets
  std::vector<std::vector<emd::IMFSet>> decomp(source_epochs.size());
  const auto decompose_one = [&](std::size_t i) {
    decomp[i] = emd::decompose_epoch(source_epochs[i], cfg.sift, Exec::serial);
  };
  std::vector<Epoch> reconstructed(jobs.size());
  const auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    reconstructed[j] = reconstruct_target_from_imfs(
        source_epochs[job.epoch_index], decomp[job.epoch_index], job.target, cfg, table);
  };

  if (serial) {
    for (std::size_t i = 0; i < source_epochs.size(); ++i) decompose_one(i);
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    parallel_for(source_epochs.size(), decompose_one, exec);
    parallel_for(jobs.size(), run_job, exec);
  }

  std::vector<Epoch> out = source_epochs;
  out.insert(out.end(), std::make_move_iterator(reconstructed.begin()),
             std::make_move_iterator(reconstructed.end()));
  return out;
}

}  // namespace

std::vector<Epoch> build_training_set(const std::vector<Epoch>& source_epochs,
                                      const FrequencyTable& table,
                                      const std::vector<int>& source_classes,
                                      const ExchangeConfig& cfg, Exec exec) {
  return build_training_set_impl(source_epochs, table, source_classes, cfg, exec, false);
}

std::vector<Epoch> build_training_set_serial(const std::vector<Epoch>& source_epochs,
                                             const FrequencyTable& table,
                                             const std::vector<int>& source_classes,
                                             const ExchangeConfig& cfg) {
  return build_training_set_impl(source_epochs, table, source_classes, cfg, Exec::serial, true);
}

double spectral_pcc(const Epoch& a, const Epoch& b, double lo_hz, double hi_hz) {
  if (a.fs_hz != b.fs_hz || a.n_samples() != b.n_samples() || a.n_channels() != b.n_channels())
    throw std::invalid_argument("spectral_pcc: epochs must share fs, length and channel count");
  std::vector<double> sa, sb;
  for (std::size_t c = 0; c < a.n_channels(); ++c) {
    const auto fa = fft_forward(a.data.row(c), a.n_samples(), a.fs_hz);
    const auto fb = fft_forward(b.data.row(c), b.n_samples(), b.fs_hz);
    for (std::size_t k = 0; k < fa.bins.size(); ++k) {
      const double f = fa.bin_hz(k);
      if (f < lo_hz || f > hi_hz) continue;
      sa.push_back(std::abs(fa.bins[k]));
      sb.push_back(std::abs(fb.bins[k]));
    }
  }
  return pearson(sa, sb);
}

}  // namespace ssvep::cstl
