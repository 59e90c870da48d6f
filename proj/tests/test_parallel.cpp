#include <doctest.h>

#include "ssvep/cstl.hpp"
#include "ssvep/emd.hpp"
#include "ssvep/evaluation.hpp"
#include "ssvep/fuzzy.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"
#include "test_helpers.hpp"

using namespace ssvep;

namespace {

Epoch noisy_epoch(std::uint64_t seed, std::size_t nch = 6) {
  std::vector<double> gains(nch, 1.0);
  return generate_ssvep({11.0, 0.0, 1}, {1.0, 0.5}, 250.0, 4.0, nch, 0.3, gains, seed);
}

FrequencyTable tiny_table() {
  FrequencyTable t;
  t.entries = {{8.0, 0.0, 0}, {11.0, 0.5, 1}, {14.0, 1.0, 2}};
  return t;
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, Exec::parallel);
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("channel decomposition matches its serial reference bit-exactly") {
  const Epoch e = noisy_epoch(3);
  const auto par = emd::decompose_epoch(e, {}, Exec::parallel);
  const auto ser = emd::decompose_epoch_serial(e);
  REQUIRE(par.size() == ser.size());
  for (std::size_t c = 0; c < par.size(); ++c) {
    REQUIRE(par[c].count() == ser[c].count());
    for (std::size_t k = 0; k < par[c].count(); ++k) CHECK(par[c].imfs[k] == ser[c].imfs[k]);
    CHECK(par[c].residue == ser[c].residue);
  }
}

TEST_CASE("training-set fan-out matches its serial reference bit-exactly") {
  const auto table = tiny_table();
  std::vector<Epoch> source;
  for (std::uint32_t k = 0; k < 2; ++k) {
    Epoch e = noisy_epoch(50 + k, 2);
    e.stimulus = table.entries[1];
    e.trial_id = k;
    source.push_back(std::move(e));
  }
  cstl::ExchangeConfig cfg;
  const auto par = cstl::build_training_set(source, table, {1}, cfg, Exec::parallel);
  const auto ser = cstl::build_training_set_serial(source, table, {1}, cfg);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].stimulus.class_index == ser[i].stimulus.class_index);
    CHECK(par[i].data == ser[i].data);
  }
}

TEST_CASE("experiment summaries are independent of repeat scheduling") {
  const auto table = tiny_table();
  std::vector<Epoch> trials;
  for (const auto& entry : table.entries)
    for (std::uint32_t k = 0; k < 3; ++k)
      trials.push_back(generate_ssvep(entry, {1.0, 0.5}, 250.0, 2.0, 2, 0.4, {1.0, 0.9},
                                      700 + 100ULL * entry.class_index + k, k));
  eval::ExperimentConfig cfg;
  cfg.method = eval::Method::fbcca;
  cfg.n_source = 2;
  cfg.window_s = 1.0;
  cfg.repeats = 3;
  cfg.seed = 13;
  const auto par = eval::run_experiment(trials, table, cfg, Exec::parallel);
  const auto ser = eval::run_experiment(trials, table, cfg, Exec::serial);
  CHECK(par.acc_mean == ser.acc_mean);
  REQUIRE(par.repeats.size() == ser.repeats.size());
  for (std::size_t r = 0; r < par.repeats.size(); ++r) {
    CHECK(par.repeats[r].acc == ser.repeats[r].acc);
    REQUIRE(par.repeats[r].trials.size() == ser.repeats[r].trials.size());
    for (std::size_t i = 0; i < par.repeats[r].trials.size(); ++i)
      CHECK(par.repeats[r].trials[i].predicted == ser.repeats[r].trials[i].predicted);
  }
}

TEST_CASE("batch gradients match their serial reference bit-exactly") {
  Rng rng(9, "par_grad");
  fuzzy::TrainConfig cfg;
  cfg.rules = 3;
  cfg.dim_query = 6;
  cfg.dim_value = 6;
  cfg.dim_hidden = 12;
  cfg.seed = 7;
  fuzzy::FuzzyModel model = fuzzy::init_model(10, 3, cfg);

  std::vector<fuzzy::Sample> data;
  for (int i = 0; i < 24; ++i) {
    Matrix t(4, 10);
    for (double& v : t.values()) v = rng.normal();
    fuzzy::FeatureMatrix x;
    x.tokens = std::move(t);
    data.emplace_back(std::move(x), i % 3);
  }
  std::vector<std::size_t> batch(data.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;

  std::vector<double> gp, gs;
  const double lp = fuzzy::batch_gradient(model, data, batch, gp, Exec::parallel);
  const double ls = fuzzy::batch_gradient_serial(model, data, batch, gs);
  CHECK(lp == ls);
  CHECK(gp == gs);
}
