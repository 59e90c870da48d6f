#pragma once

#include <vector>

#include "ssvep/parallel.hpp"
#include "ssvep/types.hpp"

namespace ssvep::emd {

// Decomposition of one channel signal: intrinsic mode functions ordered
// highest-frequency first, plus the final trend. Completeness is structural:
// resid starts as the input and each extracted IMF is subtracted from it, so
// sum(imfs) + residue reproduces the input to rounding.
struct IMFSet {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residue;
  double fs_hz = 0.0;

  std::size_t count() const { return imfs.size(); }
};

struct SiftParams {
  std::size_t max_imfs = 8;
  double sd_stop = 0.2;        // Cauchy criterion: sum((h_prev-h_cur)^2)/sum(h_prev^2)
  std::size_t max_sift_iters = 50;
};

// Interior extrema after plateau merging; plateaus report their midpoint.
void find_extrema(std::span<const double> x, std::vector<std::size_t>& maxima,
                  std::vector<std::size_t>& minima);

// Upper/lower envelopes: natural cubic splines through the maxima/minima,
// with two extrema mirror-extended past each end before fitting. Throws
// when either polarity has fewer than two extrema (the sifting stop signal).
void compute_envelopes(std::span<const double> x, std::vector<double>& upper,
                       std::vector<double>& lower);

// Empirical mode decomposition by envelope sifting. A constant or monotone
// input yields zero IMFs with the input as residue.
IMFSet sift(std::span<const double> signal, double fs_hz, const SiftParams& p = {});

// Sum of imfs k_lo..k_hi (1-based, inclusive). k_hi == count()+1 additionally
// folds in the residue.
std::vector<double> reconstruct_from_imfs(const IMFSet& s, std::size_t k_lo, std::size_t k_hi);

// Channel-wise decomposition of an epoch; channels run in parallel.
std::vector<IMFSet> decompose_epoch(const Epoch& e, const SiftParams& p = {},
                                    Exec exec = default_exec());

// Plain-loop reference for the parallel kernel above; tests compare the two
// bit-exactly.
std::vector<IMFSet> decompose_epoch_serial(const Epoch& e, const SiftParams& p = {});

}  // namespace ssvep::emd
