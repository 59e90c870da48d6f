#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ssvep {

// Dense row-major matrix of doubles. Rows are the natural unit everywhere in
// this codebase (one EEG channel, one feature token), so row() hands out a
// contiguous span.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {v_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {v_.data() + r * cols_, cols_}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> v_;
};

// One flicker stimulus: label frequency, base phase, and its class id.
struct StimulusSpec {
  double freq_hz = 0.0;
  double phase_rad = 0.0;
  int class_index = 0;

  bool operator==(const StimulusSpec&) const = default;
};

// The full stimulus set J. Class indices must be 0..n-1 with no gaps and
// frequencies pairwise distinct; validate() enforces both.
struct FrequencyTable {
  std::vector<StimulusSpec> entries;

  std::size_t size() const { return entries.size(); }

  const StimulusSpec& by_class(int class_index) const {
    for (const auto& e : entries)
      if (e.class_index == class_index) return e;
    throw std::out_of_range("frequency table: no class " + std::to_string(class_index));
  }

  void validate() const {
    std::vector<bool> seen(entries.size(), false);
    for (const auto& e : entries) {
      if (!(e.freq_hz > 0.0) || !std::isfinite(e.freq_hz))
        throw std::invalid_argument("frequency table: non-positive frequency");
      if (e.class_index < 0 || static_cast<std::size_t>(e.class_index) >= entries.size() ||
          seen[e.class_index])
        throw std::invalid_argument("frequency table: class indices must be 0..n-1, unique");
      seen[e.class_index] = true;
      for (const auto& o : entries)
        if (&o != &e && o.freq_hz == e.freq_hz)
          throw std::invalid_argument("frequency table: duplicate frequency");
    }
  }
};

// One multi-channel EEG trial. data is channels x samples; immutable by
// convention once constructed (all pipeline stages return new epochs).
struct Epoch {
  Matrix data;
  double fs_hz = 0.0;
  StimulusSpec stimulus;
  std::uint32_t trial_id = 0;

  std::size_t n_channels() const { return data.rows(); }
  std::size_t n_samples() const { return data.cols(); }
  double duration_s() const { return fs_hz > 0 ? static_cast<double>(n_samples()) / fs_hz : 0.0; }
};

// Throws if the epoch violates the basic shape/finiteness contract.
void validate_epoch(const Epoch& e);

// Half spectrum of a real signal of length n_time: bins 0..floor(n_time/2).
// Bin k sits at k*fs_hz/n_time. Forward transform is the unnormalized DFT.
struct ComplexSpectrum {
  std::vector<std::complex<double>> bins;
  double fs_hz = 0.0;
  std::size_t n_time = 0;

  double resolution_hz() const { return fs_hz / static_cast<double>(n_time); }
  double bin_hz(std::size_t k) const { return static_cast<double>(k) * resolution_hz(); }

  std::size_t nearest_bin(double freq_hz) const {
    if (freq_hz < 0.0) throw std::invalid_argument("nearest_bin: negative frequency");
    auto k = static_cast<std::size_t>(std::llround(freq_hz / resolution_hz()));
    return k < bins.size() ? k : bins.size() - 1;
  }
};

}  // namespace ssvep
