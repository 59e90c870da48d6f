#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "ssvep/parallel.hpp"
#include "ssvep/types.hpp"

namespace ssvep::fuzzy {

// Complex-spectrum feature matrix: one Re row and one Im row per channel
// (Re ch0, Im ch0, Re ch1, ...), columns are FFT bins inside [f_lo, f_hi].
// Values are raw unnormalized DFT components.
struct FeatureMatrix {
  Matrix tokens;
  std::vector<double> bin_freqs;
  std::size_t n_fft = 0;  // padded length the bins were computed from
};

// Zero-pads to ceil(fs/resolution_hz) samples and keeps bins in
// [f_lo, f_hi]. Resolutions finer than 1/(10*duration) are rejected.
FeatureMatrix fft_features(const Epoch& e, double f_lo_hz = 6.0, double f_hi_hz = 64.0,
                           double resolution_hz = 0.25);

struct TrainConfig {
  std::size_t epochs_max = 100;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t rules = 5;
  std::size_t dim_query = 32;
  std::size_t dim_value = 32;
  std::size_t dim_hidden = 128;
  // stop once the epoch mean loss drops below this; 0 disables
  double early_stop_loss = 0.0;
};

// All trainable state of the fuzzy decoder. Rule firing uses
// softmax_r(-sum_d lambda_d |q_d - m_{r,d}|) with q = W^Q x; the AIC output
// is sum_r ln(firing_r) * (W_r^V x), mean-pooled over tokens, followed by a
// two-layer ReLU MLP.
struct FuzzyModel {
  std::size_t n_rules = 0;
  std::size_t dim_in = 0;
  std::size_t dim_q = 0;
  std::size_t dim_v = 0;
  std::size_t dim_hidden = 0;
  std::size_t n_classes = 0;
  double input_scale = 1.0;  // applied to tokens before everything else

  std::vector<double> centers;     // n_rules x dim_q
  std::vector<double> log_lambda;  // dim_q, lambda = exp(log_lambda)
  std::vector<double> w_query;     // dim_in x dim_q
  std::vector<double> w_value;     // n_rules x dim_in x dim_v
  std::vector<double> w1, b1;      // dim_v x dim_hidden, dim_hidden
  std::vector<double> w2, b2;      // dim_hidden x n_classes, n_classes

  TrainConfig config;
  std::vector<double> loss_curve;  // mean loss per completed epoch
};

FuzzyModel init_model(std::size_t dim_in, std::size_t n_classes, const TrainConfig& cfg);

// Modified-Laplace membership exp(-lambda*|x - m|).
double membership(double x, double m, double lambda);

// Normalized firing strengths, tokens x rules; every row sums to 1.
Matrix firing_strengths(const FeatureMatrix& x, const FuzzyModel& model);

// Fuzzy AIC output (length dim_v), mean over tokens.
std::vector<double> fuzzy_aic_forward(const FeatureMatrix& x, const FuzzyModel& model);

// logits = W2 * relu(W1*y + b1) + b2.
std::vector<double> mlp_forward(const std::vector<double>& y, const FuzzyModel& model);

// Full forward pass.
std::vector<double> model_logits(const FuzzyModel& model, const FeatureMatrix& x);

struct Prediction {
  int class_index = 0;
  double confidence = 0.0;
};

// argmax of the logits; ties go to the lowest class index.
Prediction predict(const FuzzyModel& model, const FeatureMatrix& x);

using Sample = std::pair<FeatureMatrix, int>;

// Cross-entropy loss of one sample plus its gradient accumulated into grad
// (laid out exactly like the model's parameter vectors, concatenated).
double sample_loss_and_grad(const FuzzyModel& model, const FeatureMatrix& x, int label,
                            std::vector<double>& grad);

std::size_t param_count(const FuzzyModel& model);

// Mean loss and gradient over a batch. Work is split into a fixed number of
// chunks accumulated in index order, so the result is bit-identical for any
// thread count; the _serial variant is the plain-loop reference.
double batch_gradient(const FuzzyModel& model, const std::vector<Sample>& dataset,
                      std::span<const std::size_t> batch, std::vector<double>& grad,
                      Exec exec = default_exec());
double batch_gradient_serial(const FuzzyModel& model, const std::vector<Sample>& dataset,
                             std::span<const std::size_t> batch, std::vector<double>& grad);

// Mini-batch AdamW training, deterministic for a fixed config.seed. Throws
// on non-finite loss.
FuzzyModel train(const std::vector<Sample>& dataset, std::size_t n_classes,
                 const TrainConfig& cfg, Exec exec = default_exec());

// Central-difference validation of the analytic gradient: checks up to
// coords_per_group randomly drawn coordinates in every parameter group and
// returns the worst relative error. Coordinates whose finite-difference
// interval straddles an |x-m| or ReLU kink are skipped; pairs that are both
// below 1e-12 count as exact.
double grad_check(const FuzzyModel& model, const FeatureMatrix& x, int label, double h = 1e-5,
                  std::size_t coords_per_group = 200, std::uint64_t seed = 0);

// Checkpoint: magic "FUZZM001", dimension header, parameter blocks as f32
// little-endian in declaration order.
void save_model(const FuzzyModel& model, const std::filesystem::path& path);
FuzzyModel load_model(const std::filesystem::path& path);

}  // namespace ssvep::fuzzy
