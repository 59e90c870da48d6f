#pragma once

#include <vector>

#include "ssvep/types.hpp"

namespace ssvep::baselines {

// Sinusoidal reference templates: per class a 2*n_h x L matrix of
// [sin(2*pi*h*f*t); cos(2*pi*h*f*t)] rows, h = 1..n_h, rows L2-normalized.
struct ReferenceSignals {
  std::vector<Matrix> per_class;  // indexed by class
  std::size_t n_harmonics = 0;
  double fs_hz = 0.0;
};

ReferenceSignals build_references(const FrequencyTable& table, std::size_t n_harmonics,
                                  double fs_hz, std::size_t n_samples);

// Filter-bank configuration: subband m (1-based) passes (base_lo*m, upper)
// Hz and contributes with weight m^-a + b.
struct SubbandSpec {
  std::size_t n_subbands = 5;
  double a = 1.25;
  double b = 0.25;
  double base_lo_hz = 8.0;
  double upper_hz = 88.0;
  double gstop_db = 40.0;

  double weight(std::size_t m) const;  // m is 1-based
};

// Maximum canonical correlation between row-spaces of X (ch x L) and
// Y (k x L). Rows are centered internally; covariance diagonals carry a
// 1e-8 ridge.
double cca_corr(const Matrix& x, const Matrix& y);

// Also returns the leading canonical projection vectors.
struct CcaResult {
  double corr = 0.0;
  std::vector<double> wx, wy;
};
CcaResult cca_full(const Matrix& x, const Matrix& y);

// argmax_j cca_corr(e, refs_j); ties resolve to the lowest class.
int cca_classify(const Epoch& e, const ReferenceSignals& refs);

// argmax_j sum_m w_m * rho_{m,j}^2 over the filter bank.
int fbcca_classify(const Epoch& e, const ReferenceSignals& refs, const SubbandSpec& sb);

// Extended CCA with per-class averaged templates: combines the reference
// correlation with template correlations under three spatial-filter choices,
// summed as sign(r)*r^2. Templates carry their class in stimulus.class_index;
// every table class must have one.
int ecca_classify(const Epoch& e, const std::vector<Epoch>& templates,
                  const ReferenceSignals& refs);

// Mean epoch per class; inputs must share shape.
std::vector<Epoch> class_mean_templates(const std::vector<Epoch>& epochs,
                                        const FrequencyTable& table);

}  // namespace ssvep::baselines
