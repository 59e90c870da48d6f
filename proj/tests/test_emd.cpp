#include <doctest.h>

#include <cmath>

#include "ssvep/emd.hpp"
#include "ssvep/fft.hpp"
#include "ssvep/signal.hpp"
#include "test_helpers.hpp"

using namespace ssvep;
using namespace ssvep::test;

namespace {

double dominant_freq(const std::vector<double>& x, double fs) {
  const auto pad = static_cast<std::size_t>(std::ceil(fs / 0.25));
  const auto s = fft_forward(x, std::max(pad, x.size()), fs);
  return s.bin_hz(dominant_bin(s));
}

std::size_t count_zero_crossings(std::span<const double> x, std::size_t lo, std::size_t hi) {
  std::size_t n = 0;
  for (std::size_t i = lo + 1; i < hi; ++i)
    if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] > 0.0 && x[i] <= 0.0)) ++n;
  return n;
}

}  // namespace

TEST_CASE("constant signal yields no IMFs") {
  std::vector<double> x(200, 1.5);
  const auto set = emd::sift(x, 250.0);
  CHECK(set.count() == 0);
  CHECK(set.residue == x);

  std::vector<double> upper, lower;
  CHECK_THROWS(emd::compute_envelopes(x, upper, lower));
}

TEST_CASE("sine envelopes bracket the tone and their mean vanishes") {
  const auto x = tone(10.0, 250.0, 1000);
  std::vector<double> upper, lower;
  emd::compute_envelopes(x, upper, lower);
  double worst = 0.0;
  for (std::size_t i = 63; i < x.size() - 63; ++i)
    worst = std::max(worst, std::abs(0.5 * (upper[i] + lower[i])));
  CHECK(worst <= 0.05);

  // with a DC offset the mean envelope tracks the offset
  auto xo = x;
  for (double& v : xo) v += 0.5;
  emd::compute_envelopes(xo, upper, lower);
  for (std::size_t i = 63; i < x.size() - 63; ++i) {
    CHECK(0.5 * (upper[i] + lower[i]) == doctest::Approx(0.5).epsilon(0.1));
  }
}

TEST_CASE("envelopes touch the signal at its extrema") {
  const auto x = random_bandlimited(1000, 250.0, 5.0, 40.0, 11);
  std::vector<double> upper, lower;
  emd::compute_envelopes(x, upper, lower);
  std::vector<std::size_t> maxima, minima;
  emd::find_extrema(x, maxima, minima);
  for (std::size_t i : maxima) CHECK(upper[i] >= x[i] - 1e-9);
  for (std::size_t i : minima) CHECK(lower[i] <= x[i] + 1e-9);
}

TEST_CASE("a pure tone survives as IMF-1") {
  const auto x = tone(10.0, 250.0, 1000);
  const auto set = emd::sift(x, 250.0);
  REQUIRE(set.count() >= 1);
  CHECK(pearson(set.imfs[0], x) >= 0.99);
}

TEST_CASE("two tones separate into distinct IMFs") {
  auto x = tone(10.0, 250.0, 1000);
  const auto hi = tone(40.0, 250.0, 1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += hi[i];
  const auto set = emd::sift(x, 250.0);
  REQUIRE(set.count() >= 2);
  CHECK(dominant_freq(set.imfs[0], 250.0) == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(dominant_freq(set.imfs[1], 250.0) == doctest::Approx(10.0).epsilon(1e-9));

  // range 1..1 keeps only the high tone
  const auto only_hi = emd::reconstruct_from_imfs(set, 1, 1);
  CHECK(dominant_freq(only_hi, 250.0) == doctest::Approx(40.0).epsilon(1e-9));
}

TEST_CASE("completeness holds on band-limited noise") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_bandlimited(1000, 250.0, 1.0, 60.0, seed);
    const auto set = emd::sift(x, 250.0);
    const auto back = emd::reconstruct_from_imfs(set, 1, set.count() + 1);
    CHECK(max_abs_diff(back, x) / max_abs(x) <= 1e-8);
    CHECK(set.count() <= static_cast<std::size_t>(std::ceil(std::log2(1000.0))));
  }
}

TEST_CASE("sifting is deterministic") {
  const auto x = random_bandlimited(1000, 250.0, 2.0, 50.0, 5);
  const auto a = emd::sift(x, 250.0);
  const auto b = emd::sift(x, 250.0);
  REQUIRE(a.count() == b.count());
  for (std::size_t k = 0; k < a.count(); ++k) CHECK(a.imfs[k] == b.imfs[k]);
  CHECK(a.residue == b.residue);
}

TEST_CASE("IMFs obey the extrema/zero-crossing balance away from edges") {
  const auto x = random_bandlimited(1000, 250.0, 2.0, 50.0, 9);
  const auto set = emd::sift(x, 250.0);
  const std::size_t margin = 50;  // 5% of either edge
  for (const auto& imf : set.imfs) {
    std::vector<std::size_t> maxima, minima;
    emd::find_extrema(std::span<const double>(imf).subspan(margin, imf.size() - 2 * margin),
                      maxima, minima);
    const std::size_t extrema = maxima.size() + minima.size();
    const std::size_t zc = count_zero_crossings(imf, margin, imf.size() - margin);
    if (extrema < 3) continue;  // too slow within the margin window to judge
    CHECK(std::abs(static_cast<long long>(extrema) - static_cast<long long>(zc)) <= 1);
  }
}

TEST_CASE("energy bookkeeping on a near-orthogonal two-tone input") {
  auto x = tone(10.0, 250.0, 1000);
  const auto hi = tone(40.0, 250.0, 1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += hi[i];
  const auto set = emd::sift(x, 250.0);
  double total = 0.0;
  for (const auto& imf : set.imfs)
    for (double v : imf) total += v * v;
  for (double v : set.residue) total += v * v;
  double input = 0.0;
  for (double v : x) input += v * v;
  CHECK(total >= 0.8 * input);
}

TEST_CASE("reconstruct_from_imfs validates its range") {
  const auto set = emd::sift(tone(10.0, 250.0, 500), 250.0);
  REQUIRE(set.count() >= 1);
  CHECK(emd::reconstruct_from_imfs(set, 1, 1) == set.imfs[0]);
  CHECK_THROWS(emd::reconstruct_from_imfs(set, 0, 1));
  CHECK_THROWS(emd::reconstruct_from_imfs(set, 1, set.count() + 2));
  CHECK_THROWS(emd::reconstruct_from_imfs(set, 2, 1));
}

TEST_CASE("residue of a trend-bearing signal is monotone-ish") {
  // tone plus linear drift: the drift must land in the residue
  auto x = tone(10.0, 250.0, 1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.002 * static_cast<double>(i);
  const auto set = emd::sift(x, 250.0);
  std::vector<std::size_t> maxima, minima;
  emd::find_extrema(set.residue, maxima, minima);
  CHECK((maxima.size() < 2 || minima.size() < 2));
}
