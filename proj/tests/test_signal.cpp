#include <doctest.h>

#include <cmath>

#include "ssvep/fft.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"
#include "test_helpers.hpp"

using namespace ssvep;

namespace {

Epoch pure_tone_epoch(double f, double fs = 250.0, double dur = 4.0) {
  return generate_ssvep({f, 0.0, 0}, {1.0}, fs, dur, 1, 0.0, {1.0}, 1);
}

double trimmed_rms_ratio(const Epoch& in, const Epoch& out, std::size_t trim) {
  const auto a = in.data.row(0), b = out.data.row(0);
  std::span<const double> ta(a.data() + trim, a.size() - 2 * trim);
  std::span<const double> tb(b.data() + trim, b.size() - 2 * trim);
  return rms(tb) / rms(ta);
}

}  // namespace

TEST_CASE("generated signal starts at zero for zero phase") {
  const Epoch e = generate_ssvep({10.0, 0.0, 0}, {1.0}, 250.0, 1.0, 1, 0.0, {1.0}, 7);
  CHECK(e.data(0, 0) == 0.0);
}

TEST_CASE("noiseless generation matches the closed form at every sample") {
  const std::vector<double> amps{1.0, 0.5};
  const double fs = 250.0, f = 8.0, phase = 0.4;
  const Epoch e = generate_ssvep({f, phase, 0}, amps, fs, 2.0, 2, 0.0, {1.0, 0.7}, 3);
  for (std::size_t c = 0; c < 2; ++c) {
    const double g = c == 0 ? 1.0 : 0.7;
    for (std::size_t t = 0; t < e.n_samples(); ++t) {
      double want = 0.0;
      for (std::size_t h = 1; h <= amps.size(); ++h)
        want += amps[h - 1] * std::sin(2.0 * std::numbers::pi * h * f * t / fs + h * phase);
      CHECK(std::abs(e.data(c, t) - g * want) <= 1e-12);
    }
  }
}

TEST_CASE("two-harmonic sample hits the closed-form value at t = 1/32 s") {
  // at fs = 256 the grid contains t = 1/32 s exactly (sample 8)
  const Epoch e = generate_ssvep({8.0, 0.0, 0}, {1.0, 0.5}, 256.0, 1.0, 1, 0.0, {1.0}, 1);
  CHECK(e.data(0, 8) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dominant spectrum bin of a generated tone sits at the stimulus frequency") {
  const Epoch e = pure_tone_epoch(10.0);
  const auto s = fft_forward(e.data.row(0), e.n_samples(), e.fs_hz);
  CHECK(s.bin_hz(dominant_bin(s)) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("generation is deterministic per seed and respects Nyquist") {
  const Epoch a = generate_ssvep({10.0, 0.0, 0}, {1.0}, 250.0, 1.0, 2, 0.5, {1.0, 1.0}, 42);
  const Epoch b = generate_ssvep({10.0, 0.0, 0}, {1.0}, 250.0, 1.0, 2, 0.5, {1.0, 1.0}, 42);
  CHECK(a.data == b.data);
  CHECK_THROWS(generate_ssvep({10.0, 0.0, 0}, std::vector<double>(8, 1.0), 150.0, 1.0, 1, 0.0,
                              {1.0}, 1));
  CHECK_THROWS(generate_ssvep({10.0, 0.0, 0}, {1.0}, 250.0, 1.0, 0, 0.0, {}, 1));
}

TEST_CASE("bandpass leaves zero epochs zero") {
  Epoch z;
  z.fs_hz = 250.0;
  z.data = Matrix(2, 1000, 0.0);
  const Epoch y = chebyshev_bandpass(z);
  CHECK(test::max_abs(y.data.values()) == 0.0);
}

TEST_CASE("bandpass passes 30 Hz and crushes 2 Hz") {
  const Epoch in30 = pure_tone_epoch(30.0);
  const double r30 = trimmed_rms_ratio(in30, chebyshev_bandpass(in30), 125);
  CHECK(r30 >= 0.9);
  CHECK(r30 <= 1.1);

  const Epoch in2 = pure_tone_epoch(2.0);
  const double r2 = trimmed_rms_ratio(in2, chebyshev_bandpass(in2), 125);
  CHECK(r2 <= 2.0 * std::pow(10.0, -40.0 / 20.0));
}

TEST_CASE("notch kills 50 Hz and spares 10 Hz") {
  Epoch z;
  z.fs_hz = 250.0;
  z.data = Matrix(1, 1000, 0.0);
  CHECK(test::max_abs(notch_50hz(z).data.values()) == 0.0);

  const Epoch in50 = pure_tone_epoch(50.0);
  CHECK(trimmed_rms_ratio(in50, notch_50hz(in50), 125) <= 0.1);
  const Epoch in10 = pure_tone_epoch(10.0);
  CHECK(trimmed_rms_ratio(in10, notch_50hz(in10), 125) >= 0.95);

  Epoch slow = pure_tone_epoch(10.0, 90.0, 4.0);
  CHECK_THROWS(notch_50hz(slow));
}

TEST_CASE("filtering is linear") {
  Rng rng(5, "test_linear");
  Epoch x = pure_tone_epoch(13.0), y = pure_tone_epoch(31.0);
  for (double& v : x.data.values()) v += 0.3 * rng.normal();
  for (double& v : y.data.values()) v += 0.3 * rng.normal();
  const double a = 1.7, b = -0.6;
  Epoch mix = x;
  for (std::size_t i = 0; i < mix.data.values().size(); ++i)
    mix.data.values()[i] = a * x.data.values()[i] + b * y.data.values()[i];

  const auto fx = chebyshev_bandpass(x), fy = chebyshev_bandpass(y);
  const auto fmix = chebyshev_bandpass(mix);
  double max_rel = 0.0;
  const double scale = test::max_abs(fmix.data.values());
  for (std::size_t i = 0; i < fmix.data.values().size(); ++i) {
    const double want = a * fx.data.values()[i] + b * fy.data.values()[i];
    max_rel = std::max(max_rel, std::abs(fmix.data.values()[i] - want) / scale);
  }
  CHECK(max_rel <= 1e-9);
}

TEST_CASE("zero-phase filtering has its cross-correlation peak at lag zero") {
  const Epoch in = pure_tone_epoch(10.0);
  const Epoch out = chebyshev_bandpass(in);
  const auto a = in.data.row(0), b = out.data.row(0);
  int best_lag = 99;
  double best = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 200; i < 800; ++i)
      acc += a[i] * b[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("discard_head sample accounting") {
  Epoch e;
  e.fs_hz = 250.0;
  e.data = Matrix(2, 1500, 1.0);
  CHECK(discard_head(e, 0.0).n_samples() == 1500);
  CHECK(discard_head(e, 0.14).n_samples() == 1465);
  CHECK(discard_head(e, 0.64).n_samples() == 1340);
  CHECK_THROWS(discard_head(e, 6.0));
}

TEST_CASE("sliding window counts match the formula") {
  Epoch e;
  e.fs_hz = 250.0;
  e.stimulus = {9.0, 0.25, 3};
  e.trial_id = 17;
  e.data = Matrix(1, 1000, 0.5);
  CHECK(sliding_windows(e, 4.0, 0.1).size() == 1);
  CHECK(sliding_windows(e, 1.0, 0.5).size() == 7);
  CHECK(sliding_windows(e, 1.0, 0.1).size() == 31);

  Epoch e25;
  e25.fs_hz = 250.0;
  e25.data = Matrix(1, 625, 0.0);
  CHECK(sliding_windows(e25, 2.5, 0.1).size() == 1);

  const auto wins = sliding_windows(e, 1.0, 0.5);
  for (const auto& w : wins) {
    CHECK(w.stimulus == e.stimulus);
    CHECK(w.trial_id == e.trial_id);
    CHECK(w.n_samples() == 250);
  }
  CHECK_THROWS(sliding_windows(e, 8.0, 0.1));
}

TEST_CASE("windows tile the epoch at the declared stride") {
  Epoch e;
  e.fs_hz = 250.0;
  e.data = Matrix(1, 1000);
  auto row = e.data.row(0);
  for (std::size_t i = 0; i < row.size(); ++i) row[i] = static_cast<double>(i);
  const auto wins = sliding_windows(e, 1.0, 0.2);
  CHECK(wins.size() == 16);
  for (std::size_t w = 0; w < wins.size(); ++w)
    CHECK(wins[w].data(0, 0) == static_cast<double>(w * 50));
}
