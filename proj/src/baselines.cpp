#include "ssvep/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ssvep/filter_design.hpp"
#include "ssvep/signal.hpp"

namespace ssvep::baselines {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRidge = 1e-8;

// Cyclic Jacobi eigensolver for small symmetric matrices. Returns
// eigenvalues in d and eigenvectors as columns of v.
void jacobi_eig(Matrix a, std::vector<double>& d, Matrix& v) {
  const std::size_t n = a.rows();
  v = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;

    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  d.resize(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
}

Matrix center_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    for (double& v : row) v -= mean;
  }
  return out;
}

Matrix gram(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ra = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto rb = b.row(j);
      double acc = 0.0;
      for (std::size_t t = 0; t < ra.size(); ++t) acc += ra[t] * rb[t];
      out(i, j) = acc;
    }
  }
  return out;
}

// C^{-1/2} for a symmetric positive-definite matrix via Jacobi.
Matrix inv_sqrt(const Matrix& c) {
  std::vector<double> d;
  Matrix v;
  jacobi_eig(c, d, v);
  const std::size_t n = c.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double inv = d[k] > 0.0 ? 1.0 / std::sqrt(d[k]) : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += inv * v(i, k) * v(j, k);
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

// Pearson correlation between w'A and w2'B along time.
double projected_corr(const std::vector<double>& w, const Matrix& a,
                      const std::vector<double>& w2, const Matrix& b) {
  const std::size_t L = a.cols();
  std::vector<double> u(L, 0.0), v(L, 0.0);
  for (std::size_t c = 0; c < a.rows(); ++c) {
    const double wc = w[c];
    if (wc == 0.0) continue;
    const auto row = a.row(c);
    for (std::size_t t = 0; t < L; ++t) u[t] += wc * row[t];
  }
  for (std::size_t c = 0; c < b.rows(); ++c) {
    const double wc = w2[c];
    if (wc == 0.0) continue;
    const auto row = b.row(c);
    for (std::size_t t = 0; t < L; ++t) v[t] += wc * row[t];
  }
  try {
    return pearson(u, v);
  } catch (const std::invalid_argument&) {
    return 0.0;  // zero-variance projection carries no evidence
  }
}

}  // namespace

double SubbandSpec::weight(std::size_t m) const {
  return std::pow(static_cast<double>(m), -a) + b;
}

ReferenceSignals build_references(const FrequencyTable& table, std::size_t n_harmonics,
                                  double fs_hz, std::size_t n_samples) {
  if (n_harmonics < 1) throw std::invalid_argument("build_references: n_harmonics >= 1");
  table.validate();
  double f_max = 0.0;
  for (const auto& e : table.entries) f_max = std::max(f_max, e.freq_hz);
  if (!(static_cast<double>(n_harmonics) * f_max < fs_hz / 2.0))
    throw std::invalid_argument("build_references: harmonics exceed Nyquist");

  ReferenceSignals refs;
  refs.n_harmonics = n_harmonics;
  refs.fs_hz = fs_hz;
  refs.per_class.resize(table.size());
  for (const auto& e : table.entries) {
    Matrix m(2 * n_harmonics, n_samples);
    for (std::size_t h = 1; h <= n_harmonics; ++h) {
      auto srow = m.row(2 * (h - 1));
      auto crow = m.row(2 * (h - 1) + 1);
      for (std::size_t t = 0; t < n_samples; ++t) {
        const double ang = 2.0 * kPi * static_cast<double>(h) * e.freq_hz *
                           static_cast<double>(t) / fs_hz;
        srow[t] = std::sin(ang);
        crow[t] = std::cos(ang);
      }
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      double nrm = 0.0;
      for (double v : row) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (nrm > 0.0)
        for (double& v : row) v /= nrm;
    }
    refs.per_class[static_cast<std::size_t>(e.class_index)] = std::move(m);
  }
  return refs;
}

CcaResult cca_full(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw std::invalid_argument("cca: time lengths differ");
  if (x.cols() <= x.rows() + y.rows())
    throw std::invalid_argument("cca: need more samples than total rows");

  const Matrix xc = center_rows(x);
  const Matrix yc = center_rows(y);
  Matrix cxx = gram(xc, xc);
  Matrix cyy = gram(yc, yc);
  const Matrix cxy = gram(xc, yc);
  for (std::size_t i = 0; i < cxx.rows(); ++i) cxx(i, i) += kRidge;
  for (std::size_t i = 0; i < cyy.rows(); ++i) cyy(i, i) += kRidge;

  const Matrix wx = inv_sqrt(cxx);
  const Matrix wy = inv_sqrt(cyy);
  const Matrix m = matmul(matmul(wx, cxy), wy);  // ch x k

  // singular values of m from the eigensystem of m'm
  Matrix mtm(m.cols(), m.cols());
  for (std::size_t i = 0; i < m.cols(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m.rows(); ++k) acc += m(k, i) * m(k, j);
      mtm(i, j) = acc;
    }
  std::vector<double> d;
  Matrix v;
  jacobi_eig(mtm, d, v);
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] > d[best]) best = i;

  CcaResult res;
  res.corr = d[best] > 0.0 ? std::clamp(std::sqrt(d[best]), 0.0, 1.0) : 0.0;

  std::vector<double> vy(m.cols());
  for (std::size_t i = 0; i < m.cols(); ++i) vy[i] = v(i, best);
  res.wy = matvec(wy, vy);
  std::vector<double> ux = matvec(m, vy);
  if (res.corr > 0.0)
    for (double& u : ux) u /= res.corr;
  res.wx = matvec(wx, ux);
  return res;
}

double cca_corr(const Matrix& x, const Matrix& y) { return cca_full(x, y).corr; }

int cca_classify(const Epoch& e, const ReferenceSignals& refs) {
  int best = 0;
  double best_score = -1.0;
  for (std::size_t j = 0; j < refs.per_class.size(); ++j) {
    const double rho = cca_corr(e.data, refs.per_class[j]);
    if (rho > best_score) {
      best_score = rho;
      best = static_cast<int>(j);
    }
  }
  return best;
}

int fbcca_classify(const Epoch& e, const ReferenceSignals& refs, const SubbandSpec& sb) {
  if (e.duration_s() < 0.25) throw std::invalid_argument("fbcca: epoch shorter than 0.25 s");
  std::vector<double> score(refs.per_class.size(), 0.0);
  for (std::size_t m = 1; m <= sb.n_subbands; ++m) {
    const double lo = sb.base_lo_hz * static_cast<double>(m);
    const double hi = sb.upper_hz;
    if (!(lo < hi)) break;
    const Epoch sub = chebyshev_bandpass(e, lo, hi, sb.gstop_db);
    const double w = sb.weight(m);
    for (std::size_t j = 0; j < refs.per_class.size(); ++j) {
      const double rho = cca_corr(sub.data, refs.per_class[j]);
      score[j] += w * rho * rho;
    }
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < score.size(); ++j)
    if (score[j] > score[best]) best = j;
  return static_cast<int>(best);
}

int ecca_classify(const Epoch& e, const std::vector<Epoch>& templates,
                  const ReferenceSignals& refs) {
  std::vector<const Epoch*> by_class(refs.per_class.size(), nullptr);
  for (const Epoch& t : templates) {
    const auto j = static_cast<std::size_t>(t.stimulus.class_index);
    if (j < by_class.size()) by_class[j] = &t;
  }
  for (std::size_t j = 0; j < by_class.size(); ++j)
    if (!by_class[j])
      throw std::invalid_argument("ecca: missing template for class " + std::to_string(j));

  std::size_t best = 0;
  double best_score = -1e300;
  for (std::size_t j = 0; j < by_class.size(); ++j) {
    const Matrix& y = refs.per_class[j];
    const Matrix& tmpl = by_class[j]->data;

    const CcaResult xy = cca_full(e.data, y);
    const CcaResult xt = cca_full(e.data, tmpl);
    const CcaResult ty = cca_full(tmpl, y);

    const double r1 = xy.corr;
    const double r2 = projected_corr(xt.wx, e.data, xt.wx, tmpl);
    const double r3 = projected_corr(xy.wx, e.data, xy.wx, tmpl);
    const double r4 = projected_corr(ty.wx, e.data, ty.wx, tmpl);

    double score = 0.0;
    for (double r : {r1, r2, r3, r4}) score += (r >= 0.0 ? 1.0 : -1.0) * r * r;
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return static_cast<int>(best);
}

std::vector<Epoch> class_mean_templates(const std::vector<Epoch>& epochs,
                                        const FrequencyTable& table) {
  std::vector<Epoch> out;
  for (const auto& entry : table.entries) {
    Epoch mean;
    std::size_t n = 0;
    for (const Epoch& e : epochs) {
      if (e.stimulus.class_index != entry.class_index) continue;
      if (n == 0) {
        mean = e;
      } else {
        if (e.n_channels() != mean.n_channels() || e.n_samples() != mean.n_samples())
          throw std::invalid_argument("class_mean_templates: shape mismatch");
        for (std::size_t i = 0; i < mean.data.values().size(); ++i)
          mean.data.values()[i] += e.data.values()[i];
      }
      ++n;
    }
    if (n == 0) continue;
    for (double& v : mean.data.values()) v /= static_cast<double>(n);
    mean.stimulus = entry;
    out.push_back(std::move(mean));
  }
  return out;
}

}  // namespace ssvep::baselines
