// Benchmark comparing the OpenMP kernels against their serial references:
// channel-wise EMD, the reconstruction fan-out, feature extraction, and the
// batch gradient.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ssvep/cstl.hpp"
#include "ssvep/emd.hpp"
#include "ssvep/evaluation.hpp"
#include "ssvep/fuzzy.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/signal.hpp"

using namespace ssvep;

namespace {

double time_s(const std::function<void()>& fn, int reps) {
  // one warm-up, then best of reps
  fn();
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count());
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  const std::size_t n_channels = quick ? 8 : 16;
  const std::size_t n_trials = quick ? 2 : 4;

  std::printf("threads available: %d\n", max_threads());

  FrequencyTable table;
  for (int j = 0; j < 6; ++j) table.entries.push_back({8.0 + j, 0.5 * j, j});

  std::vector<double> gains(n_channels, 1.0);
  std::vector<Epoch> source;
  for (std::uint32_t t = 0; t < n_trials; ++t)
    source.push_back(generate_ssvep(table.entries[1], {1.0, 0.5}, 250.0, 4.0, n_channels, 0.3,
                                    gains, 100 + t, t));

  {
    const Epoch& e = source.front();
    const double ts = time_s([&] { emd::decompose_epoch_serial(e); }, 3);
    const double tp = time_s([&] { emd::decompose_epoch(e, {}, Exec::parallel); }, 3);
    report("emd channels", ts, tp);
  }

  cstl::ExchangeConfig cfg;
  {
    const double ts =
        time_s([&] { cstl::build_training_set_serial(source, table, {1}, cfg); }, 2);
    const double tp =
        time_s([&] { cstl::build_training_set(source, table, {1}, cfg, Exec::parallel); }, 2);
    report("reconstruction fan-out", ts, tp);
  }

  const auto training = cstl::build_training_set_serial(source, table, {1}, cfg);
  eval::ExperimentConfig ecfg;
  ecfg.window_s = 1.0;
  ecfg.train_stride_s = 0.25;
  {
    const double ts = time_s([&] { eval::feature_dataset(training, ecfg, Exec::serial); }, 2);
    const double tp = time_s([&] { eval::feature_dataset(training, ecfg, Exec::parallel); }, 2);
    report("feature extraction", ts, tp);
  }

  const auto dataset = eval::feature_dataset(training, ecfg, Exec::parallel);
  fuzzy::TrainConfig tcfg;
  tcfg.rules = 5;
  tcfg.seed = 1;
  const auto model = fuzzy::init_model(dataset.front().first.tokens.cols(), table.size(), tcfg);
  std::vector<std::size_t> batch(std::min<std::size_t>(dataset.size(), 64));
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  {
    std::vector<double> grad;
    const double ts =
        time_s([&] { fuzzy::batch_gradient_serial(model, dataset, batch, grad); }, 3);
    const double tp =
        time_s([&] { fuzzy::batch_gradient(model, dataset, batch, grad, Exec::parallel); }, 3);
    report("batch gradient", ts, tp);
  }
  return 0;
}
