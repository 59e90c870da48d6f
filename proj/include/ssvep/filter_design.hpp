#pragma once

#include <span>
#include <vector>

namespace ssvep {

// One normalized second-order section (a0 == 1).
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Cascade of biquads applied in direct form II transposed.
struct SosFilter {
  std::vector<Biquad> sections;

  std::vector<double> apply(std::span<const double> x) const;

  // Forward-backward application with odd-reflection edge padding and
  // steady-state initial conditions, so passband tones come out with zero
  // phase lag and no startup transient.
  std::vector<double> filtfilt(std::span<const double> x) const;
};

// Chebyshev type-I bandpass. The order is the minimum that reaches
// gstop_db attenuation at both stopband edges with ripple_db passband
// ripple; pole/zero placement goes through the analog lowpass prototype,
// the lowpass-to-bandpass transform, and the bilinear transform.
SosFilter design_cheby1_bandpass(double lo_hz, double hi_hz, double stop_lo_hz,
                                 double stop_hi_hz, double fs_hz, double gstop_db,
                                 double ripple_db = 0.5);

// Second-order notch at f0_hz with quality factor q (bandwidth f0/q).
SosFilter design_notch(double f0_hz, double q, double fs_hz);

}  // namespace ssvep
