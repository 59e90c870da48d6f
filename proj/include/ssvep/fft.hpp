#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

// In-place complex DFT of arbitrary length: iterative radix-2 for powers of
// two, Bluestein's chirp transform otherwise. inverse=true applies the 1/N
// scaling.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Unnormalized forward DFT of a real signal zero-padded to pad_to samples;
// returns the half spectrum (bins 0..floor(pad_to/2)). Bin 0 and the Nyquist
// bin are forced to be purely real.
ComplexSpectrum fft_forward(std::span<const double> signal, std::size_t pad_to, double fs_hz);

// Inverse of fft_forward: rebuilds the full spectrum by conjugate symmetry
// and returns the real time series of length s.n_time.
std::vector<double> ifft_inverse(const ComplexSpectrum& s);

// |bins| of the half spectrum.
std::vector<double> amplitude_spectrum(const ComplexSpectrum& s);

// Index of the largest-magnitude bin, searched over [lo_hz, hi_hz] when
// given (inclusive), otherwise over everything above DC.
std::size_t dominant_bin(const ComplexSpectrum& s, double lo_hz = 0.0, double hi_hz = -1.0);

}  // namespace ssvep
