#include "ssvep/filter_design.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ssvep {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

// Bilinear-transform prewarp onto the normalized analog axis (fs == 1/2,
// z = (1+s)/(1-s)).
double prewarp(double f_hz, double fs_hz) { return std::tan(kPi * f_hz / fs_hz); }

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
  double gain = 1.0;
};

// Analog Chebyshev-I lowpass prototype, cutoff 1 rad/s.
Zpk cheby1_prototype(int order, double ripple_db) {
  const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / order;
  Zpk zpk;
  cplx prod(1.0, 0.0);
  for (int k = 1; k <= order; ++k) {
    const double theta = kPi * (2.0 * k - 1.0) / (2.0 * order);
    const cplx p(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
    zpk.poles.push_back(p);
    prod *= -p;
  }
  zpk.gain = prod.real();
  if (order % 2 == 0) zpk.gain /= std::sqrt(1.0 + eps * eps);
  return zpk;
}

// Lowpass (cutoff 1) to bandpass (center w0, width bw), analog domain.
Zpk lp_to_bp(const Zpk& lp, double w0, double bw) {
  Zpk out;
  out.gain = lp.gain * std::pow(bw, static_cast<double>(lp.poles.size() - lp.zeros.size()));
  for (const cplx& p : lp.poles) {
    const cplx half = p * bw * 0.5;
    const cplx disc = std::sqrt(half * half - w0 * w0);
    out.poles.push_back(half + disc);
    out.poles.push_back(half - disc);
  }
  // each lowpass pole contributes one bandpass zero at s = 0
  out.zeros.assign(lp.poles.size(), cplx(0.0, 0.0));
  return out;
}

// Bilinear transform with the normalized mapping z = (1+s)/(1-s).
Zpk bilinear(const Zpk& analog) {
  Zpk out;
  cplx num(1.0, 0.0), den(1.0, 0.0);
  for (const cplx& z : analog.zeros) {
    out.zeros.push_back((1.0 + z) / (1.0 - z));
    num *= (1.0 - z);
  }
  for (const cplx& p : analog.poles) {
    out.poles.push_back((1.0 + p) / (1.0 - p));
    den *= (1.0 - p);
  }
  // degree deficit maps zeros at infinity onto z = -1
  for (std::size_t i = analog.zeros.size(); i < analog.poles.size(); ++i)
    out.zeros.push_back(cplx(-1.0, 0.0));
  out.gain = analog.gain * (num / den).real();
  return out;
}

// Pair conjugate poles into biquads. Bandpass designs built above always
// give an even pole count; zeros are n at +1 and n at -1, one of each per
// section, so every numerator is g*(z^2 - 1).
SosFilter zpk_to_sos_bandpass(const Zpk& zpk) {
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : zpk.poles) {
    if (std::abs(p.imag()) < 1e-12)
      reals.push_back(p.real());
    else if (p.imag() > 0.0)
      upper.push_back(p);
  }
  const std::size_t n_sections = zpk.poles.size() / 2;
  if (upper.size() * 2 + reals.size() != zpk.poles.size())
    throw std::runtime_error("filter design: unpaired complex pole");

  // sections ordered by pole radius, closest to the unit circle last
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });

  const double g = zpk.gain >= 0.0
                       ? std::pow(zpk.gain, 1.0 / static_cast<double>(n_sections))
                       : zpk.gain;  // negative gain lands on the first section whole

  SosFilter f;
  for (const cplx& p : upper) {
    Biquad s;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    s.b0 = g;
    s.b1 = 0.0;
    s.b2 = -g;
    f.sections.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad s;
    s.a1 = -(reals[i] + reals[i + 1]);
    s.a2 = reals[i] * reals[i + 1];
    s.b0 = g;
    s.b1 = 0.0;
    s.b2 = -g;
    f.sections.push_back(s);
  }
  if (zpk.gain < 0.0)
    for (std::size_t i = 1; i < f.sections.size(); ++i) {
      f.sections[i].b0 = 1.0;
      f.sections[i].b2 = -1.0;
    }
  return f;
}

// Steady-state state vector for a unit step into one DF2T biquad.
void step_state(const Biquad& s, double x0, double& z1, double& z2) {
  const double denom = 1.0 + s.a1 + s.a2;
  const double y0 = std::abs(denom) > 1e-300 ? (s.b0 + s.b1 + s.b2) / denom * x0 : 0.0;
  z2 = s.b2 * x0 - s.a2 * y0;
  z1 = (s.b1 + s.b2) * x0 - (s.a1 + s.a2) * y0;
}

std::vector<double> sos_forward(const std::vector<Biquad>& sections, std::vector<double> x,
                                bool steady_ic) {
  for (const Biquad& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    if (steady_ic && !x.empty()) step_state(s, x.front(), z1, z2);
    for (double& v : x) {
      const double y = s.b0 * v + z1;
      z1 = s.b1 * v - s.a1 * y + z2;
      z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
  }
  return x;
}

}  // namespace

std::vector<double> SosFilter::apply(std::span<const double> x) const {
  return sos_forward(sections, std::vector<double>(x.begin(), x.end()), false);
}

std::vector<double> SosFilter::filtfilt(std::span<const double> x) const {
  if (x.size() < 2) throw std::invalid_argument("filtfilt: signal too short");
  const std::size_t pad = std::min(x.size() - 1, static_cast<std::size_t>(250));

  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[x.size() - 1 - i]);

  ext = sos_forward(sections, std::move(ext), true);
  std::reverse(ext.begin(), ext.end());
  ext = sos_forward(sections, std::move(ext), true);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

SosFilter design_cheby1_bandpass(double lo_hz, double hi_hz, double stop_lo_hz,
                                 double stop_hi_hz, double fs_hz, double gstop_db,
                                 double ripple_db) {
  const double nyq = fs_hz / 2.0;
  if (!(0.0 < lo_hz && lo_hz < hi_hz && hi_hz < nyq))
    throw std::invalid_argument("bandpass design: need 0 < lo < hi < fs/2");
  if (!(0.0 < stop_lo_hz && stop_lo_hz < lo_hz && hi_hz < stop_hi_hz && stop_hi_hz < nyq))
    throw std::invalid_argument("bandpass design: stop edges infeasible for this fs");

  const double wp0 = prewarp(lo_hz, fs_hz);
  const double wp1 = prewarp(hi_hz, fs_hz);
  const double w0 = std::sqrt(wp0 * wp1);
  const double bw = wp1 - wp0;

  double omega_s = 1e300;
  for (double f : {stop_lo_hz, stop_hi_hz}) {
    const double ws = prewarp(f, fs_hz);
    omega_s = std::min(omega_s, std::abs((ws * ws - w0 * w0) / (ws * bw)));
  }
  if (omega_s <= 1.0) throw std::invalid_argument("bandpass design: stopband inside passband");

  const double gstop = std::pow(10.0, gstop_db / 10.0) - 1.0;
  const double gpass = std::pow(10.0, ripple_db / 10.0) - 1.0;
  const int order = static_cast<int>(
      std::ceil(std::acosh(std::sqrt(gstop / gpass)) / std::acosh(omega_s) - 1e-12));
  if (order < 1 || order > 24)
    throw std::invalid_argument("bandpass design: required order out of range");

  const Zpk digital = bilinear(lp_to_bp(cheby1_prototype(order, ripple_db), w0, bw));
  return zpk_to_sos_bandpass(digital);
}

SosFilter design_notch(double f0_hz, double q, double fs_hz) {
  if (!(f0_hz > 0.0 && f0_hz < fs_hz / 2.0))
    throw std::invalid_argument("notch design: f0 must be below Nyquist");
  if (!(q > 0.0)) throw std::invalid_argument("notch design: q must be positive");
  const double w0 = 2.0 * kPi * f0_hz / fs_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  SosFilter f;
  f.sections.push_back(s);
  return f;
}

}  // namespace ssvep
