#include "ssvep/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssvep/fft.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"

namespace ssvep::fuzzy {

namespace {

// Parameter groups in checkpoint/gradient order.
struct ParamView {
  std::vector<double>* v;
  const char* name;
};

std::vector<ParamView> param_views(FuzzyModel& m) {
  return {{&m.centers, "centers"}, {&m.log_lambda, "log_lambda"}, {&m.w_query, "w_query"},
          {&m.w_value, "w_value"}, {&m.w1, "w1"},                 {&m.b1, "b1"},
          {&m.w2, "w2"},           {&m.b2, "b2"}};
}

std::vector<const std::vector<double>*> param_views(const FuzzyModel& m) {
  return {&m.centers, &m.log_lambda, &m.w_query, &m.w_value, &m.w1, &m.b1, &m.w2, &m.b2};
}

void check_dims(const FuzzyModel& m, const FeatureMatrix& x) {
  if (x.tokens.cols() != m.dim_in)
    throw std::invalid_argument("fuzzy: token dimension does not match model dim_in");
  if (x.tokens.rows() == 0) throw std::invalid_argument("fuzzy: empty feature matrix");
}

// Everything the backward pass needs from one forward evaluation.
struct Forward {
  Matrix xs;       // scaled tokens, T x Din
  Matrix q;        // T x Dq
  Matrix log_fs;   // T x R (log softmax)
  Matrix fs;       // T x R
  Matrix v;        // T x (R*Dv)
  std::vector<double> y;                   // Dv
  std::vector<double> z1, a1, logits, p;   // H, H, C, C
  double loss = 0.0;
};

void forward_pass(const FuzzyModel& m, const FeatureMatrix& x, int label, Forward& f,
                  bool need_loss) {
  const std::size_t T = x.tokens.rows(), Din = m.dim_in, Dq = m.dim_q, Dv = m.dim_v,
                    R = m.n_rules, H = m.dim_hidden, C = m.n_classes;

  f.xs = Matrix(T, Din);
  for (std::size_t i = 0; i < T; ++i) {
    const auto src = x.tokens.row(i);
    auto dst = f.xs.row(i);
    for (std::size_t j = 0; j < Din; ++j) dst[j] = src[j] * m.input_scale;
  }

  f.q = Matrix(T, Dq);
  for (std::size_t i = 0; i < T; ++i) {
    const auto xi = f.xs.row(i);
    auto qi = f.q.row(i);
    for (std::size_t j = 0; j < Din; ++j) {
      const double xj = xi[j];
      const double* wr = m.w_query.data() + j * Dq;
      for (std::size_t d = 0; d < Dq; ++d) qi[d] += xj * wr[d];
    }
  }

  f.log_fs = Matrix(T, R);
  f.fs = Matrix(T, R);
  std::vector<double> lambda(Dq);
  for (std::size_t d = 0; d < Dq; ++d) lambda[d] = std::exp(m.log_lambda[d]);
  for (std::size_t i = 0; i < T; ++i) {
    const auto qi = f.q.row(i);
    auto si = f.log_fs.row(i);
    for (std::size_t r = 0; r < R; ++r) {
      const double* mr = m.centers.data() + r * Dq;
      double s = 0.0;
      for (std::size_t d = 0; d < Dq; ++d) s += lambda[d] * std::abs(qi[d] - mr[d]);
      si[r] = -s;
    }
    // log softmax over rules
    double mx = si[0];
    for (std::size_t r = 1; r < R; ++r) mx = std::max(mx, si[r]);
    double lse = 0.0;
    for (std::size_t r = 0; r < R; ++r) lse += std::exp(si[r] - mx);
    lse = mx + std::log(lse);
    auto fi = f.fs.row(i);
    for (std::size_t r = 0; r < R; ++r) {
      si[r] -= lse;
      fi[r] = std::exp(si[r]);
    }
  }

  f.v = Matrix(T, R * Dv);
  for (std::size_t i = 0; i < T; ++i) {
    const auto xi = f.xs.row(i);
    auto vi = f.v.row(i);
    for (std::size_t r = 0; r < R; ++r) {
      double* vr = vi.data() + r * Dv;
      const double* wv = m.w_value.data() + r * Din * Dv;
      for (std::size_t j = 0; j < Din; ++j) {
        const double xj = xi[j];
        const double* wj = wv + j * Dv;
        for (std::size_t c = 0; c < Dv; ++c) vr[c] += xj * wj[c];
      }
    }
  }

  f.y.assign(Dv, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    const auto li = f.log_fs.row(i);
    const auto vi = f.v.row(i);
    for (std::size_t r = 0; r < R; ++r) {
      const double w = li[r];
      const double* vr = vi.data() + r * Dv;
      for (std::size_t c = 0; c < Dv; ++c) f.y[c] += w * vr[c];
    }
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  for (double& v : f.y) v *= inv_t;

  f.z1.assign(H, 0.0);
  for (std::size_t c = 0; c < Dv; ++c) {
    const double yc = f.y[c];
    const double* w = m.w1.data() + c * H;
    for (std::size_t h = 0; h < H; ++h) f.z1[h] += yc * w[h];
  }
  for (std::size_t h = 0; h < H; ++h) f.z1[h] += m.b1[h];
  f.a1.resize(H);
  for (std::size_t h = 0; h < H; ++h) f.a1[h] = f.z1[h] > 0.0 ? f.z1[h] : 0.0;

  f.logits.assign(C, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    const double ah = f.a1[h];
    if (ah == 0.0) continue;
    const double* w = m.w2.data() + h * C;
    for (std::size_t k = 0; k < C; ++k) f.logits[k] += ah * w[k];
  }
  for (std::size_t k = 0; k < C; ++k) f.logits[k] += m.b2[k];

  if (need_loss) {
    double mx = f.logits[0];
    for (double v : f.logits) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : f.logits) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    f.p.resize(C);
    for (std::size_t k = 0; k < C; ++k) f.p[k] = std::exp(f.logits[k] - lse);
    f.loss = lse - f.logits[static_cast<std::size_t>(label)];
  }
}

// Gradient layout: one flat vector, groups concatenated in param_views order.
struct GradSlices {
  std::span<double> centers, log_lambda, w_query, w_value, w1, b1, w2, b2;
};

GradSlices slice_grad(const FuzzyModel& m, std::vector<double>& g) {
  GradSlices s;
  double* p = g.data();
  auto take = [&p](std::size_t n) {
    auto sp = std::span<double>(p, n);
    p += n;
    return sp;
  };
  s.centers = take(m.centers.size());
  s.log_lambda = take(m.log_lambda.size());
  s.w_query = take(m.w_query.size());
  s.w_value = take(m.w_value.size());
  s.w1 = take(m.w1.size());
  s.b1 = take(m.b1.size());
  s.w2 = take(m.w2.size());
  s.b2 = take(m.b2.size());
  return s;
}

void backward_pass(const FuzzyModel& m, int label, const Forward& f, std::vector<double>& grad) {
  const std::size_t T = f.xs.rows(), Din = m.dim_in, Dq = m.dim_q, Dv = m.dim_v, R = m.n_rules,
                    H = m.dim_hidden, C = m.n_classes;
  GradSlices g = slice_grad(m, grad);

  std::vector<double> dlogits(C);
  for (std::size_t k = 0; k < C; ++k)
    dlogits[k] = f.p[k] - (k == static_cast<std::size_t>(label) ? 1.0 : 0.0);

  std::vector<double> da1(H, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    const double ah = f.a1[h];
    const double* w = m.w2.data() + h * C;
    double acc = 0.0;
    for (std::size_t k = 0; k < C; ++k) {
      g.w2[h * C + k] += ah * dlogits[k];
      acc += w[k] * dlogits[k];
    }
    da1[h] = acc;
  }
  for (std::size_t k = 0; k < C; ++k) g.b2[k] += dlogits[k];

  std::vector<double> dz1(H);
  for (std::size_t h = 0; h < H; ++h) dz1[h] = f.z1[h] > 0.0 ? da1[h] : 0.0;

  std::vector<double> dy(Dv, 0.0);
  for (std::size_t c = 0; c < Dv; ++c) {
    const double yc = f.y[c];
    const double* w = m.w1.data() + c * H;
    double acc = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      g.w1[c * H + h] += yc * dz1[h];
      acc += w[h] * dz1[h];
    }
    dy[c] = acc;
  }
  for (std::size_t h = 0; h < H; ++h) g.b1[h] += dz1[h];

  const double inv_t = 1.0 / static_cast<double>(T);
  std::vector<double> lambda(Dq), dlambda(Dq, 0.0);
  for (std::size_t d = 0; d < Dq; ++d) lambda[d] = std::exp(m.log_lambda[d]);

  std::vector<double> dlog_fs(R), ds(R), dq(Dq);
  for (std::size_t i = 0; i < T; ++i) {
    const auto xi = f.xs.row(i);
    const auto qi = f.q.row(i);
    const auto li = f.log_fs.row(i);
    const auto fi = f.fs.row(i);
    const auto vi = f.v.row(i);

    // y_c = (1/T) sum_r log_fs[r] * v[r][c]
    double dsum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double* vr = vi.data() + r * Dv;
      double acc = 0.0;
      for (std::size_t c = 0; c < Dv; ++c) acc += dy[c] * vr[c];
      dlog_fs[r] = acc * inv_t;
      dsum += dlog_fs[r];

      // dv[r][c] = (1/T) * dy[c] * log_fs[r]
      const double w = li[r] * inv_t;
      double* gv = g.w_value.data() + r * Din * Dv;
      for (std::size_t j = 0; j < Din; ++j) {
        const double xj = xi[j] * w;
        if (xj == 0.0) continue;
        double* gj = gv + j * Dv;
        for (std::size_t c = 0; c < Dv; ++c) gj[c] += xj * dy[c];
      }
    }

    // log-softmax backward: ds_r = dlog_fs_r - fs_r * sum(dlog_fs)
    for (std::size_t r = 0; r < R; ++r) ds[r] = dlog_fs[r] - fi[r] * dsum;

    // s_r = -sum_d lambda_d * |q_d - m_rd|
    std::fill(dq.begin(), dq.end(), 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      const double dsr = ds[r];
      if (dsr == 0.0) continue;
      const double* mr = m.centers.data() + r * Dq;
      double* gm = g.centers.data() + r * Dq;
      for (std::size_t d = 0; d < Dq; ++d) {
        const double diff = qi[d] - mr[d];
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        dq[d] -= dsr * lambda[d] * sgn;
        gm[d] += dsr * lambda[d] * sgn;
        dlambda[d] -= dsr * std::abs(diff);
      }
    }

    for (std::size_t j = 0; j < Din; ++j) {
      const double xj = xi[j];
      if (xj == 0.0) continue;
      double* gq = g.w_query.data() + j * Dq;
      for (std::size_t d = 0; d < Dq; ++d) gq[d] += xj * dq[d];
    }
  }

  for (std::size_t d = 0; d < Dq; ++d) g.log_lambda[d] += dlambda[d] * lambda[d];
}

}  // namespace

FeatureMatrix fft_features(const Epoch& e, double f_lo_hz, double f_hi_hz,
                           double resolution_hz) {
  validate_epoch(e);
  if (!(f_hi_hz < e.fs_hz / 2.0))
    throw std::invalid_argument("fft_features: f_hi must be below Nyquist");
  if (!(resolution_hz > 0.0)) throw std::invalid_argument("fft_features: bad resolution");
  if (resolution_hz < 1.0 / (10.0 * e.duration_s()))
    throw std::invalid_argument("fft_features: resolution finer than 1/(10*duration)");
  const auto pad = std::max(
      e.n_samples(), static_cast<std::size_t>(std::ceil(e.fs_hz / resolution_hz)));

  FeatureMatrix out;
  out.n_fft = pad;
  std::vector<std::size_t> keep;
  const auto first = fft_forward(e.data.row(0), pad, e.fs_hz);
  for (std::size_t k = 0; k < first.bins.size(); ++k) {
    const double f = first.bin_hz(k);
    if (f >= f_lo_hz && f <= f_hi_hz) {
      keep.push_back(k);
      out.bin_freqs.push_back(f);
    }
  }
  if (keep.empty()) throw std::invalid_argument("fft_features: empty frequency window");

  out.tokens = Matrix(2 * e.n_channels(), keep.size());
  for (std::size_t c = 0; c < e.n_channels(); ++c) {
    const auto spec = c == 0 ? first : fft_forward(e.data.row(c), pad, e.fs_hz);
    auto re = out.tokens.row(2 * c);
    auto im = out.tokens.row(2 * c + 1);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      re[k] = spec.bins[keep[k]].real();
      im[k] = spec.bins[keep[k]].imag();
    }
  }
  return out;
}

FuzzyModel init_model(std::size_t dim_in, std::size_t n_classes, const TrainConfig& cfg) {
  if (cfg.rules < 1) throw std::invalid_argument("init_model: need at least one rule");
  FuzzyModel m;
  m.n_rules = cfg.rules;
  m.dim_in = dim_in;
  m.dim_q = cfg.dim_query;
  m.dim_v = cfg.dim_value;
  m.dim_hidden = cfg.dim_hidden;
  m.n_classes = n_classes;
  m.config = cfg;

  Rng rc(cfg.seed, "fuzzy_init_centers");
  m.centers.resize(m.n_rules * m.dim_q);
  for (double& v : m.centers) v = 0.1 * rc.normal();
  m.log_lambda.assign(m.dim_q, 0.0);

  const double aq = 1.0 / std::sqrt(static_cast<double>(dim_in));
  Rng rq(cfg.seed, "fuzzy_init_query");
  m.w_query.resize(dim_in * m.dim_q);
  for (double& v : m.w_query) v = rq.uniform(-aq, aq);

  Rng rv(cfg.seed, "fuzzy_init_value");
  m.w_value.resize(m.n_rules * dim_in * m.dim_v);
  for (double& v : m.w_value) v = rv.uniform(-aq, aq);

  const double a1 = 1.0 / std::sqrt(static_cast<double>(m.dim_v));
  Rng r1(cfg.seed, "fuzzy_init_mlp1");
  m.w1.resize(m.dim_v * m.dim_hidden);
  for (double& v : m.w1) v = r1.uniform(-a1, a1);
  m.b1.assign(m.dim_hidden, 0.0);

  const double a2 = 1.0 / std::sqrt(static_cast<double>(m.dim_hidden));
  Rng r2(cfg.seed, "fuzzy_init_mlp2");
  m.w2.resize(m.dim_hidden * n_classes);
  for (double& v : m.w2) v = r2.uniform(-a2, a2);
  m.b2.assign(n_classes, 0.0);
  return m;
}

double membership(double x, double m, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("membership: lambda must be non-negative");
  return std::exp(-lambda * std::abs(x - m));
}

Matrix firing_strengths(const FeatureMatrix& x, const FuzzyModel& model) {
  check_dims(model, x);
  Forward f;
  forward_pass(model, x, 0, f, false);
  return f.fs;
}

std::vector<double> fuzzy_aic_forward(const FeatureMatrix& x, const FuzzyModel& model) {
  check_dims(model, x);
  Forward f;
  forward_pass(model, x, 0, f, false);
  return f.y;
}

std::vector<double> mlp_forward(const std::vector<double>& y, const FuzzyModel& model) {
  if (y.size() != model.dim_v) throw std::invalid_argument("mlp_forward: dimension mismatch");
  std::vector<double> z1(model.dim_hidden, 0.0);
  for (std::size_t c = 0; c < model.dim_v; ++c)
    for (std::size_t h = 0; h < model.dim_hidden; ++h) z1[h] += y[c] * model.w1[c * model.dim_hidden + h];
  for (std::size_t h = 0; h < model.dim_hidden; ++h) z1[h] = std::max(0.0, z1[h] + model.b1[h]);
  std::vector<double> out(model.b2);
  for (std::size_t h = 0; h < model.dim_hidden; ++h)
    for (std::size_t k = 0; k < model.n_classes; ++k)
      out[k] += z1[h] * model.w2[h * model.n_classes + k];
  return out;
}

std::vector<double> model_logits(const FuzzyModel& model, const FeatureMatrix& x) {
  check_dims(model, x);
  Forward f;
  forward_pass(model, x, 0, f, false);
  return f.logits;
}

Prediction predict(const FuzzyModel& model, const FeatureMatrix& x) {
  const auto logits = model_logits(model, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[best]) best = k;
  double mx = logits[best], lse = 0.0;
  for (double v : logits) lse += std::exp(v - mx);
  return {static_cast<int>(best), 1.0 / lse};
}

std::size_t param_count(const FuzzyModel& model) {
  std::size_t n = 0;
  for (const auto* v : param_views(model)) n += v->size();
  return n;
}

double sample_loss_and_grad(const FuzzyModel& model, const FeatureMatrix& x, int label,
                            std::vector<double>& grad) {
  check_dims(model, x);
  if (label < 0 || static_cast<std::size_t>(label) >= model.n_classes)
    throw std::invalid_argument("sample_loss_and_grad: label out of range");
  Forward f;
  forward_pass(model, x, label, f, true);
  backward_pass(model, label, f, grad);
  return f.loss;
}

namespace {
constexpr std::size_t kGradChunks = 8;

double batch_gradient_impl(const FuzzyModel& model, const std::vector<Sample>& dataset,
                           std::span<const std::size_t> batch, std::vector<double>& grad,
                           Exec exec, bool serial) {
  const std::size_t np = param_count(model);
  grad.assign(np, 0.0);
  if (batch.empty()) return 0.0;

  const std::size_t n_chunks = std::min(kGradChunks, batch.size());
  std::vector<std::vector<double>> part(n_chunks);
  std::vector<double> losses(n_chunks, 0.0);
  const auto run_chunk = [&](std::size_t c) {
    part[c].assign(np, 0.0);
    for (std::size_t i = c; i < batch.size(); i += n_chunks) {
      const Sample& s = dataset[batch[i]];
      losses[c] += sample_loss_and_grad(model, s.first, s.second, part[c]);
    }
  };
  if (serial)
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  else
    parallel_for(n_chunks, run_chunk, exec);

  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t c = 0; c < n_chunks; ++c) {
    loss += losses[c];
    for (std::size_t t = 0; t < np; ++t) grad[t] += part[c][t];
  }
  for (double& v : grad) v *= inv;
  return loss * inv;
}
}  // namespace

double batch_gradient(const FuzzyModel& model, const std::vector<Sample>& dataset,
                      std::span<const std::size_t> batch, std::vector<double>& grad, Exec exec) {
  return batch_gradient_impl(model, dataset, batch, grad, exec, false);
}

double batch_gradient_serial(const FuzzyModel& model, const std::vector<Sample>& dataset,
                             std::span<const std::size_t> batch, std::vector<double>& grad) {
  return batch_gradient_impl(model, dataset, batch, grad, Exec::serial, true);
}

FuzzyModel train(const std::vector<Sample>& dataset, std::size_t n_classes,
                 const TrainConfig& cfg, Exec exec) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size == 0 || cfg.batch_size > dataset.size())
    throw std::invalid_argument("train: batch_size must be in [1, dataset size]");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("train: beta coefficients must lie in (0, 1)");
  if (!(cfg.eps > 0.0) || cfg.lr < 0.0 || cfg.weight_decay < 0.0 || cfg.epochs_max == 0)
    throw std::invalid_argument("train: non-positive optimizer constants");
  std::vector<bool> seen(n_classes, false);
  std::size_t distinct = 0;
  for (const auto& [x, y] : dataset) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
      throw std::invalid_argument("train: label out of range");
    if (!seen[y]) {
      seen[y] = true;
      ++distinct;
    }
    if (x.n_fft != dataset.front().first.n_fft ||
        x.tokens.cols() != dataset.front().first.tokens.cols())
      throw std::invalid_argument("train: inconsistent feature shapes");
  }
  if (distinct < 2) throw std::invalid_argument("train: dataset covers fewer than 2 classes");

  FuzzyModel model = init_model(dataset.front().first.tokens.cols(), n_classes, cfg);
  model.input_scale =
      dataset.front().first.n_fft > 0 ? 2.0 / static_cast<double>(dataset.front().first.n_fft)
                                      : 1.0;

  const std::size_t np = param_count(model);
  std::vector<double> grad(np), m1(np, 0.0), m2(np, 0.0);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(cfg.seed, "fuzzy_train_shuffle");

  for (std::size_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    std::size_t step = epoch * ((dataset.size() + cfg.batch_size - 1) / cfg.batch_size);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const double loss =
          batch_gradient(model, dataset, {order.data() + start, len}, grad, exec);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(n_batches));
      epoch_loss += loss;
      ++n_batches;
      ++step;

      // AdamW with decoupled weight decay
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      std::size_t t = 0;
      for (auto& pv : param_views(model)) {
        for (double& w : *pv.v) {
          m1[t] = cfg.beta1 * m1[t] + (1.0 - cfg.beta1) * grad[t];
          m2[t] = cfg.beta2 * m2[t] + (1.0 - cfg.beta2) * grad[t] * grad[t];
          const double mh = m1[t] / bc1;
          const double vh = m2[t] / bc2;
          w -= cfg.lr * (mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * w);
          ++t;
        }
      }
    }

    model.loss_curve.push_back(epoch_loss / static_cast<double>(n_batches));
    if (cfg.early_stop_loss > 0.0 && model.loss_curve.back() < cfg.early_stop_loss) break;
  }
  return model;
}

namespace {

// Sign pattern of every kink argument (|q-m| terms and ReLU inputs) for the
// straddle test in grad_check.
std::vector<int> kink_signature(const FuzzyModel& m, const FeatureMatrix& x) {
  Forward f;
  forward_pass(m, x, 0, f, false);
  std::vector<int> sig;
  sig.reserve(f.q.rows() * m.n_rules * m.dim_q + m.dim_hidden);
  for (std::size_t i = 0; i < f.q.rows(); ++i) {
    const auto qi = f.q.row(i);
    for (std::size_t r = 0; r < m.n_rules; ++r) {
      const double* mr = m.centers.data() + r * m.dim_q;
      for (std::size_t d = 0; d < m.dim_q; ++d) {
        const double diff = qi[d] - mr[d];
        sig.push_back(diff > 1e-8 ? 1 : (diff < -1e-8 ? -1 : 0));
      }
    }
  }
  for (std::size_t h = 0; h < m.dim_hidden; ++h)
    sig.push_back(f.z1[h] > 1e-8 ? 1 : (f.z1[h] < -1e-8 ? -1 : 0));
  return sig;
}

}  // namespace

double grad_check(const FuzzyModel& model, const FeatureMatrix& x, int label, double h,
                  std::size_t coords_per_group, std::uint64_t seed) {
  FuzzyModel m = model;
  const std::size_t np = param_count(m);
  std::vector<double> analytic(np, 0.0);
  sample_loss_and_grad(m, x, label, analytic);

  Rng rng(seed, "grad_check");
  double worst = 0.0;
  std::size_t offset = 0;
  for (auto& pv : param_views(m)) {
    std::vector<double>& p = *pv.v;
    std::vector<std::size_t> coords;
    if (p.size() <= coords_per_group) {
      coords.resize(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) coords[i] = i;
    } else {
      coords = rng.sample_without_replacement(p.size(), coords_per_group);
    }

    for (std::size_t c : coords) {
      const double saved = p[c];
      p[c] = saved + h;
      Forward fp;
      forward_pass(m, x, label, fp, true);
      const auto sig_plus = kink_signature(m, x);
      p[c] = saved - h;
      Forward fm;
      forward_pass(m, x, label, fm, true);
      const auto sig_minus = kink_signature(m, x);
      p[c] = saved;

      // a sign flip between the two evaluations means the interval straddles
      // a nondifferentiable point
      bool straddles = false;
      for (std::size_t i = 0; i < sig_plus.size(); ++i)
        if (sig_plus[i] != sig_minus[i] || sig_plus[i] == 0) {
          straddles = true;
          break;
        }
      if (straddles) continue;

      const double numeric = (fp.loss - fm.loss) / (2.0 * h);
      const double ga = analytic[offset + c];
      if (std::abs(numeric) < 1e-12 && std::abs(ga) < 1e-12) continue;
      const double rel =
          std::abs(numeric - ga) / std::max({std::abs(numeric), std::abs(ga), 1e-6});
      worst = std::max(worst, rel);
    }
    offset += p.size();
  }
  return worst;
}

namespace {
void put_u32f(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32f(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32f(buf, bits);
}
std::uint32_t get_u32f(const std::string& s, std::size_t& pos) {
  if (pos + 4 > s.size()) throw std::runtime_error("model checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  pos += 4;
  return v;
}
float get_f32f(const std::string& s, std::size_t& pos) {
  const std::uint32_t bits = get_u32f(s, pos);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}
}  // namespace

void save_model(const FuzzyModel& model, const std::filesystem::path& path) {
  std::string buf;
  buf.append("FUZZM001", 8);
  for (std::size_t d : {model.n_rules, model.dim_in, model.dim_q, model.dim_v, model.dim_hidden,
                        model.n_classes})
    put_u32f(buf, static_cast<std::uint32_t>(d));
  put_f32f(buf, static_cast<float>(model.input_scale));
  put_u32f(buf, static_cast<std::uint32_t>(model.config.seed & 0xffffffffULL));
  for (const auto* block : param_views(model))
    for (double v : *block) put_f32f(buf, static_cast<float>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model checkpoint: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FuzzyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  if (data.size() < 8 || data.compare(0, 8, "FUZZM001") != 0)
    throw std::runtime_error("bad model checkpoint magic: " + path.string());

  std::size_t pos = 8;
  FuzzyModel m;
  m.n_rules = get_u32f(data, pos);
  m.dim_in = get_u32f(data, pos);
  m.dim_q = get_u32f(data, pos);
  m.dim_v = get_u32f(data, pos);
  m.dim_hidden = get_u32f(data, pos);
  m.n_classes = get_u32f(data, pos);
  m.input_scale = get_f32f(data, pos);
  m.config.seed = get_u32f(data, pos);
  m.config.rules = m.n_rules;
  m.config.dim_query = m.dim_q;
  m.config.dim_value = m.dim_v;
  m.config.dim_hidden = m.dim_hidden;

  m.centers.resize(m.n_rules * m.dim_q);
  m.log_lambda.resize(m.dim_q);
  m.w_query.resize(m.dim_in * m.dim_q);
  m.w_value.resize(m.n_rules * m.dim_in * m.dim_v);
  m.w1.resize(m.dim_v * m.dim_hidden);
  m.b1.resize(m.dim_hidden);
  m.w2.resize(m.dim_hidden * m.n_classes);
  m.b2.resize(m.n_classes);
  for (const auto& pv : param_views(m))
    for (double& v : *pv.v) v = get_f32f(data, pos);
  if (pos != data.size()) throw std::runtime_error("model checkpoint has trailing bytes");
  return m;
}

}  // namespace ssvep::fuzzy
