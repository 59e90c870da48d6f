#include "ssvep/emd.hpp"

#include <cmath>
#include <stdexcept>

namespace ssvep::emd {

namespace {

// Natural cubic spline through (t, y) knots, evaluated at integers 0..n-1.
std::vector<double> spline_eval(const std::vector<double>& t, const std::vector<double>& y,
                                std::size_t n) {
  const std::size_t m = t.size();
  if (m < 2) throw std::invalid_argument("spline: need at least 2 knots");

  std::vector<double> h(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    h[i] = t[i + 1] - t[i];
    if (!(h[i] > 0.0)) throw std::invalid_argument("spline: knots not strictly increasing");
  }

  // second derivatives via the Thomas algorithm, natural boundary M0=Mm-1=0
  std::vector<double> M(m, 0.0);
  if (m > 2) {
    const std::size_t k = m - 2;
    std::vector<double> diag(k), rhs(k), upper(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
      upper[i] = h[i + 1];
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    M[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i >= 1; --i)
      M[i] = (rhs[i - 1] - upper[i - 1] * M[i + 1]) / diag[i - 1];
  }

  std::vector<double> out(n);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j);
    while (seg + 2 < m && x > t[seg + 1]) ++seg;
    const double dt = h[seg];
    const double a = (t[seg + 1] - x) / dt;
    const double b = (x - t[seg]) / dt;
    out[j] = a * y[seg] + b * y[seg + 1] +
             ((a * a * a - a) * M[seg] + (b * b * b - b) * M[seg + 1]) * (dt * dt) / 6.0;
  }
  return out;
}

// Mirrors two extrema around each end; t runs over signed sample positions.
void extend_mirror(const std::vector<std::size_t>& idx, std::span<const double> x,
                   std::vector<double>& t, std::vector<double>& y) {
  const auto n = static_cast<long long>(x.size());
  t.clear();
  y.clear();
  const std::size_t ext = std::min<std::size_t>(2, idx.size());
  for (std::size_t i = ext; i >= 1; --i) {
    t.push_back(-static_cast<double>(idx[i - 1]));
    y.push_back(x[idx[i - 1]]);
  }
  for (std::size_t i : idx) {
    t.push_back(static_cast<double>(i));
    y.push_back(x[i]);
  }
  for (std::size_t i = 0; i < ext; ++i) {
    const auto j = idx[idx.size() - 1 - i];
    t.push_back(static_cast<double>(2 * (n - 1) - static_cast<long long>(j)));
    y.push_back(x[j]);
  }
}

bool try_envelopes(std::span<const double> x, std::vector<double>& upper,
                   std::vector<double>& lower) {
  std::vector<std::size_t> maxima, minima;
  find_extrema(x, maxima, minima);
  if (maxima.size() < 2 || minima.size() < 2) return false;

  std::vector<double> t, y;
  extend_mirror(maxima, x, t, y);
  upper = spline_eval(t, y, x.size());
  extend_mirror(minima, x, t, y);
  lower = spline_eval(t, y, x.size());
  return true;
}

}  // namespace

void find_extrema(std::span<const double> x, std::vector<std::size_t>& maxima,
                  std::vector<std::size_t>& minima) {
  maxima.clear();
  minima.clear();
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i] > x[i - 1]) {
      // climb, then either a peak or a plateau ending in a drop
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[j]) ++j;
      if (j + 1 < n && x[j + 1] < x[j]) maxima.push_back((i + j) / 2);
      i = j + 1;
    } else if (x[i] < x[i - 1]) {
      std::size_t j = i;
      while (j + 1 < n && x[j + 1] == x[j]) ++j;
      if (j + 1 < n && x[j + 1] > x[j]) minima.push_back((i + j) / 2);
      i = j + 1;
    } else {
      ++i;
    }
  }
}

void compute_envelopes(std::span<const double> x, std::vector<double>& upper,
                       std::vector<double>& lower) {
  if (!try_envelopes(x, upper, lower))
    throw std::invalid_argument("compute_envelopes: fewer than 2 extrema of each polarity");
}

IMFSet sift(std::span<const double> signal, double fs_hz, const SiftParams& p) {
  if (signal.size() < 16) throw std::invalid_argument("sift: signal shorter than 16 samples");
  IMFSet out;
  out.fs_hz = fs_hz;
  out.residue.assign(signal.begin(), signal.end());

  std::vector<double> h, upper, lower;
  for (std::size_t k = 0; k < p.max_imfs; ++k) {
    // residue termination: fewer than 2 extrema of either polarity
    std::vector<std::size_t> maxima, minima;
    find_extrema(out.residue, maxima, minima);
    if (maxima.size() < 2 || minima.size() < 2) break;

    h = out.residue;
    for (std::size_t iter = 0; iter < p.max_sift_iters; ++iter) {
      if (!try_envelopes(h, upper, lower)) break;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double m = 0.5 * (upper[i] + lower[i]);
        num += m * m;
        den += h[i] * h[i];
        h[i] -= m;
      }
      if (den <= 0.0 || num / den < p.sd_stop) break;
    }

    for (std::size_t i = 0; i < h.size(); ++i) out.residue[i] -= h[i];
    out.imfs.push_back(h);
  }
  return out;
}

std::vector<double> reconstruct_from_imfs(const IMFSet& s, std::size_t k_lo, std::size_t k_hi) {
  const std::size_t k = s.count();
  if (k_lo < 1 || k_lo > k_hi || k_hi > k + 1)
    throw std::out_of_range("reconstruct_from_imfs: index range out of bounds");
  const bool with_residue = k_hi == k + 1;
  const std::size_t hi = with_residue ? k : k_hi;

  std::vector<double> out(s.residue.size(), 0.0);
  for (std::size_t j = k_lo; j <= hi; ++j)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s.imfs[j - 1][i];
  if (with_residue)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s.residue[i];
  return out;
}

std::vector<IMFSet> decompose_epoch(const Epoch& e, const SiftParams& p, Exec exec) {
  std::vector<IMFSet> out(e.n_channels());
  parallel_for(
      e.n_channels(), [&](std::size_t c) { out[c] = sift(e.data.row(c), e.fs_hz, p); }, exec);
  return out;
}

std::vector<IMFSet> decompose_epoch_serial(const Epoch& e, const SiftParams& p) {
  std::vector<IMFSet> out(e.n_channels());
  for (std::size_t c = 0; c < e.n_channels(); ++c) out[c] = sift(e.data.row(c), e.fs_hz, p);
  return out;
}

}  // namespace ssvep::emd
