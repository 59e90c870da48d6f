#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ssvep/fuzzy.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"
#include "test_helpers.hpp"

using namespace ssvep;
using namespace ssvep::fuzzy;

namespace {

FeatureMatrix make_features(const Matrix& tokens) {
  FeatureMatrix x;
  x.tokens = tokens;
  x.n_fft = 0;  // keeps input_scale at 1 for hand-built fixtures
  return x;
}

FuzzyModel zero_model(std::size_t dim_in, std::size_t dq, std::size_t dv, std::size_t rules,
                      std::size_t hidden, std::size_t classes) {
  TrainConfig cfg;
  cfg.rules = rules;
  cfg.dim_query = dq;
  cfg.dim_value = dv;
  cfg.dim_hidden = hidden;
  cfg.seed = 0;
  FuzzyModel m = init_model(dim_in, classes, cfg);
  for (auto* v : {&m.centers, &m.w_query, &m.w_value, &m.w1, &m.b1, &m.w2, &m.b2})
    std::fill(v->begin(), v->end(), 0.0);
  std::fill(m.log_lambda.begin(), m.log_lambda.end(), 0.0);
  return m;
}

FeatureMatrix random_features(std::size_t tokens, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed, "fuzzy_test_features");
  Matrix t(tokens, dim);
  for (double& v : t.values()) v = rng.normal();
  return make_features(t);
}

// two linearly separable classes in feature space
std::vector<Sample> separable_dataset(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed, "fuzzy_test_separable");
  std::vector<Sample> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int cls = 0; cls < 2; ++cls) {
      Matrix t(2, 8);
      for (double& v : t.values()) v = 0.3 * rng.normal() + (cls == 0 ? 1.0 : -1.0);
      out.emplace_back(make_features(t), cls);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("fft_features matches the spectral sign convention") {
  Epoch e;
  e.fs_hz = 256.0;
  e.data = Matrix(2, 256);
  for (std::size_t k = 0; k < 256; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) * 16.0 / 256.0;
    e.data(0, k) = std::cos(ang);
    e.data(1, k) = std::sin(ang);
  }
  const auto x = fft_features(e, 6.0, 64.0, 1.0);
  CHECK(x.tokens.rows() == 4);
  CHECK(x.n_fft == 256);
  // bin index of 16 Hz inside the 6..64 window (bins start at 6 Hz)
  std::size_t k16 = 0;
  for (std::size_t k = 0; k < x.bin_freqs.size(); ++k)
    if (x.bin_freqs[k] == 16.0) k16 = k;
  CHECK(x.tokens(0, k16) == doctest::Approx(128.0).epsilon(1e-9));   // Re of cos channel
  CHECK(std::abs(x.tokens(1, k16)) <= 1e-9);                          // Im of cos channel
  CHECK(std::abs(x.tokens(2, k16)) <= 1e-9);                          // Re of sin channel
  CHECK(x.tokens(3, k16) == doctest::Approx(-128.0).epsilon(1e-9));  // Im of sin channel

  for (std::size_t k = 1; k < x.bin_freqs.size(); ++k) CHECK(x.bin_freqs[k] > x.bin_freqs[k - 1]);
  CHECK(x.bin_freqs.front() >= 6.0);
  CHECK(x.bin_freqs.back() <= 64.0);
}

TEST_CASE("fft_features of a zero epoch is all zero") {
  Epoch e;
  e.fs_hz = 250.0;
  e.data = Matrix(3, 250, 0.0);
  const auto x = fft_features(e);
  CHECK(x.tokens.rows() == 6);
  for (double v : x.tokens.values()) CHECK(v == 0.0);
}

TEST_CASE("fft_features rejects absurd resolutions and high edges") {
  Epoch e;
  e.fs_hz = 250.0;
  e.data = Matrix(1, 250, 0.0);
  CHECK_THROWS(fft_features(e, 6.0, 64.0, 0.05));  // finer than 1/(10*duration)
  CHECK_THROWS(fft_features(e, 6.0, 130.0, 0.25));
}

TEST_CASE("membership endpoints") {
  CHECK(membership(3.2, 3.2, 5.0) == 1.0);
  CHECK(membership(7.0, -2.0, 0.0) == 1.0);
  CHECK(membership(1.0, 0.0, 1.0) == doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(membership(0.0, 1.0, 1.0) == membership(2.0, 1.0, 1.0));  // symmetry in |x-m|
  CHECK(membership(0.5, 0.0, 2.0) > membership(1.0, 0.0, 2.0));   // monotone in distance
  CHECK_THROWS(membership(0.0, 0.0, -1.0));
}

TEST_CASE("firing strengths normalize and hit the softmax fixture") {
  // q = 0 with centers at 1, -2, 3 gives logits (-1, -2, -3) under lambda = 1
  FuzzyModel m = zero_model(1, 1, 1, 3, 2, 2);
  m.centers = {1.0, -2.0, 3.0};
  const auto x = make_features(Matrix(1, 1, 0.0));
  const Matrix fs = firing_strengths(x, m);
  CHECK(fs(0, 0) == doctest::Approx(0.66524096).epsilon(1e-6));
  CHECK(fs(0, 1) == doctest::Approx(0.24472847).epsilon(1e-6));
  CHECK(fs(0, 2) == doctest::Approx(0.09003057).epsilon(1e-6));
  CHECK(fs(0, 0) + fs(0, 1) + fs(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equidistant rules fire uniformly") {
  FuzzyModel m = zero_model(4, 2, 2, 5, 2, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    m.centers[r * 2 + 0] = (r % 2 ? 1.0 : -1.0);
    m.centers[r * 2 + 1] = (r % 2 ? -1.0 : 1.0);
  }
  const auto x = make_features(Matrix(1, 4, 0.0));  // q = 0, all centers at L1 distance 2
  const Matrix fs = firing_strengths(x, m);
  for (std::size_t r = 0; r < 5; ++r) CHECK(fs(0, r) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("an exactly matching center with large lambda takes the row") {
  FuzzyModel m = zero_model(3, 2, 2, 3, 2, 2);
  std::fill(m.log_lambda.begin(), m.log_lambda.end(), std::log(50.0));
  m.centers = {0.0, 0.0, /*rule1*/ 4.0, 4.0, /*rule2*/ -4.0, 4.0};
  const auto x = make_features(Matrix(1, 3, 0.0));  // q = 0 matches rule 0
  const Matrix fs = firing_strengths(x, m);
  CHECK(fs(0, 0) >= 0.999);
}

TEST_CASE("rule permutation only permutes firing columns") {
  Rng rng(4, "fuzzy_perm");
  TrainConfig cfg;
  cfg.rules = 4;
  cfg.dim_query = 3;
  cfg.dim_value = 3;
  cfg.dim_hidden = 4;
  cfg.seed = 11;
  FuzzyModel m = init_model(5, 3, cfg);
  const auto x = random_features(3, 5, 8);

  FuzzyModel p = m;  // rotate rules by one
  const std::size_t R = m.n_rules, dq = m.dim_q, dvs = m.dim_in * m.dim_v;
  for (std::size_t r = 0; r < R; ++r) {
    const std::size_t src = (r + 1) % R;
    for (std::size_t d = 0; d < dq; ++d) p.centers[r * dq + d] = m.centers[src * dq + d];
    for (std::size_t i = 0; i < dvs; ++i) p.w_value[r * dvs + i] = m.w_value[src * dvs + i];
  }

  const Matrix fa = firing_strengths(x, m);
  const Matrix fb = firing_strengths(x, p);
  for (std::size_t i = 0; i < fa.rows(); ++i)
    for (std::size_t r = 0; r < R; ++r)
      CHECK(fb(i, r) == doctest::Approx(fa(i, (r + 1) % R)).epsilon(1e-12));

  const auto ya = fuzzy_aic_forward(x, m);
  const auto yb = fuzzy_aic_forward(x, p);
  for (std::size_t c = 0; c < ya.size(); ++c)
    CHECK(yb[c] == doctest::Approx(ya[c]).epsilon(1e-12));
}

TEST_CASE("single-rule AIC output degenerates to zero") {
  TrainConfig cfg;
  cfg.rules = 1;
  cfg.dim_query = 2;
  cfg.dim_value = 3;
  cfg.seed = 5;
  FuzzyModel m = init_model(4, 2, cfg);
  const auto y = fuzzy_aic_forward(random_features(2, 4, 3), m);
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("zero value projections give a zero AIC output") {
  TrainConfig cfg;
  cfg.rules = 3;
  cfg.seed = 6;
  FuzzyModel m = init_model(4, 2, cfg);
  std::fill(m.w_value.begin(), m.w_value.end(), 0.0);
  for (double v : fuzzy_aic_forward(random_features(2, 4, 9), m)) CHECK(v == 0.0);
}

TEST_CASE("tiny AIC instance matches an independent scalar recomputation") {
  // 1 token x = (2, -1), dim_q = 1, R = 2, dim_v = 1
  FuzzyModel m = zero_model(2, 1, 1, 2, 2, 2);
  m.w_query = {0.5, -0.25};             // q = 0.5*2 + (-0.25)*(-1) = 1.25
  m.centers = {1.0, -0.5};              // distances 0.25, 1.75
  m.log_lambda = {std::log(2.0)};       // lambda = 2
  m.w_value = {0.3, -0.2, 0.1, 0.4};    // rule0: (0.3,-0.2), rule1: (0.1,0.4)

  Matrix t(1, 2);
  t(0, 0) = 2.0;
  t(0, 1) = -1.0;
  const auto y = fuzzy_aic_forward(make_features(t), m);

  const double s0 = -2.0 * std::abs(1.25 - 1.0);
  const double s1 = -2.0 * std::abs(1.25 + 0.5);
  const double lse = std::log(std::exp(s0) + std::exp(s1));
  const double v0 = 0.3 * 2.0 + (-0.2) * (-1.0);
  const double v1 = 0.1 * 2.0 + 0.4 * (-1.0);
  const double want = (s0 - lse) * v0 + (s1 - lse) * v1;
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mlp endpoints and a hand-set 2-2-2 instance") {
  FuzzyModel m = zero_model(2, 1, 2, 2, 2, 2);
  m.b2 = {0.7, -0.3};
  const auto z = mlp_forward({0.0, 0.0}, m);
  CHECK(z[0] == 0.7);
  CHECK(z[1] == -0.3);

  m.b1 = {1.0, -1.0};
  m.w2 = {0.5, -0.5, 0.25, 0.75};
  const auto z2 = mlp_forward({0.0, 0.0}, m);  // relu(b1) = (1, 0)
  CHECK(z2[0] == doctest::Approx(0.7 + 0.5).epsilon(1e-12));
  CHECK(z2[1] == doctest::Approx(-0.3 - 0.5).epsilon(1e-12));

  m.w1 = {1.0, 0.0, 0.0, 1.0};
  const std::vector<double> y{0.5, -2.0};   // z1 = (1.5, -3), relu = (1.5, 0)
  const auto z3 = mlp_forward(y, m);
  CHECK(z3[0] == doctest::Approx(0.7 + 1.5 * 0.5).epsilon(1e-12));
  CHECK(z3[1] == doctest::Approx(-0.3 + 1.5 * -0.5).epsilon(1e-12));
}

TEST_CASE("predict follows argmax with lowest-index ties") {
  FuzzyModel m = zero_model(2, 1, 2, 2, 2, 3);
  const auto x = make_features(Matrix(1, 2, 0.0));
  m.b2 = {0.0, 3.0, -1.0};
  CHECK(predict(m, x).class_index == 1);
  m.b2 = {1.0, 1.0, 1.0};
  CHECK(predict(m, x).class_index == 0);
  // invariance to adding a constant to all logits
  m.b2 = {0.4, 2.0, -0.6};
  const int before = predict(m, x).class_index;
  for (double& v : m.b2) v += 11.0;
  CHECK(predict(m, x).class_index == before);
}

TEST_CASE("training separates a separable problem and is deterministic") {
  const auto data = separable_dataset(24, 17);
  TrainConfig cfg;
  cfg.rules = 3;
  cfg.dim_query = 4;
  cfg.dim_value = 4;
  cfg.dim_hidden = 16;
  cfg.batch_size = 16;
  cfg.seed = 99;
  cfg.epochs_max = 100;

  const FuzzyModel a = train(data, 2, cfg);
  std::size_t correct = 0;
  for (const auto& [x, y] : data)
    if (predict(a, x).class_index == y) ++correct;
  CHECK(correct == data.size());
  CHECK(a.loss_curve.back() < a.loss_curve.front());

  const FuzzyModel b = train(data, 2, cfg);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK(a.centers == b.centers);
  CHECK(a.w_value == b.w_value);
}

TEST_CASE("zero learning rate and weight decay leave parameters bit-identical") {
  const auto data = separable_dataset(6, 2);
  TrainConfig cfg;
  cfg.rules = 3;
  cfg.dim_query = 4;
  cfg.dim_value = 4;
  cfg.dim_hidden = 8;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.epochs_max = 3;
  cfg.lr = 0.0;
  cfg.weight_decay = 0.0;
  const FuzzyModel trained = train(data, 2, cfg);
  const FuzzyModel fresh = init_model(8, 2, cfg);
  CHECK(trained.centers == fresh.centers);
  CHECK(trained.log_lambda == fresh.log_lambda);
  CHECK(trained.w_query == fresh.w_query);
  CHECK(trained.w_value == fresh.w_value);
  CHECK(trained.w1 == fresh.w1);
  CHECK(trained.w2 == fresh.w2);
}

TEST_CASE("training rejects degenerate datasets") {
  auto data = separable_dataset(4, 3);
  TrainConfig cfg;
  cfg.batch_size = 4;
  for (auto& s : data) s.second = 0;
  CHECK_THROWS(train(data, 2, cfg));
  CHECK_THROWS(train({}, 2, cfg));
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed : {1ull, 2ull}) {
    TrainConfig cfg;
    cfg.rules = 3;
    cfg.dim_query = 4;
    cfg.dim_value = 4;
    cfg.dim_hidden = 8;
    cfg.seed = seed;
    FuzzyModel m = init_model(8, 3, cfg);
    const auto x = random_features(4, 8, seed + 10);
    const double err = grad_check(m, x, static_cast<int>(seed % 3), 1e-5, 200, seed);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("checkpoints round-trip through disk") {
  const auto data = separable_dataset(6, 8);
  TrainConfig cfg;
  cfg.rules = 3;
  cfg.dim_query = 4;
  cfg.dim_value = 4;
  cfg.dim_hidden = 8;
  cfg.batch_size = 8;
  cfg.seed = 21;
  cfg.epochs_max = 5;
  const FuzzyModel m = train(data, 2, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "ssvep_fuzzy_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.fuzzm";
  save_model(m, path);
  const FuzzyModel r = load_model(path);
  CHECK(r.n_rules == m.n_rules);
  CHECK(r.dim_in == m.dim_in);
  CHECK(r.n_classes == m.n_classes);

  // save(load(x)) is byte-stable
  const auto path2 = dir / "model2.fuzzm";
  save_model(r, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // loaded model predicts identically to a reloaded copy
  const auto x = separable_dataset(1, 30)[0].first;
  const FuzzyModel r2 = load_model(path2);
  CHECK(model_logits(r, x) == model_logits(r2, x));
}
