#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ssvep/baselines.hpp"
#include "ssvep/cstl.hpp"
#include "ssvep/fuzzy.hpp"
#include "ssvep/parallel.hpp"
#include "ssvep/types.hpp"

namespace ssvep::eval {

// One randomized source/target split: source classes P get real training
// data, targets Q get reconstructions; one trial per source class is held
// out for the test set.
struct SplitPlan {
  std::vector<int> source_classes;          // sorted
  std::vector<int> target_classes;          // sorted
  std::vector<std::uint32_t> held_out;      // held_out[i] pairs with source_classes[i]
  std::uint64_t seed = 0;
};

SplitPlan split_source_target(const FrequencyTable& table, std::size_t n_source,
                              std::size_t n_trials, std::uint64_t seed);

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth);

// Wolpaw information transfer rate in bits/min. Chance-level accuracy maps
// to exactly zero; values below chance come out negative.
double itr_bits_per_min(double p_acc, std::size_t n_classes, double t_total_s);

// Two-sided paired t-test; p from the Student CDF via the regularized
// incomplete beta function.
struct TTest {
  double t = 0.0;
  double p = 1.0;
};
TTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

enum class Method { fuzzy, cca, fbcca, ecca, emd_ecca };
Method method_from_string(const std::string& s);
std::string method_name(Method m);

struct TrialRecord {
  std::uint32_t trial_id = 0;
  int true_class = 0;
  int predicted = 0;
  double latency_s = 0.0;
};

struct RepeatReport {
  std::uint64_t seed = 0;
  double acc = 0.0;
  double itr = 0.0;  // bits/min, clamped at 0 for below-chance accuracy
  double t_inference_s = 0.0;
  double wall_time_s = 0.0;
  std::vector<TrialRecord> trials;
  bool failed = false;
  std::string error;
};

struct ExperimentConfig {
  Method method = Method::fuzzy;
  std::size_t n_source = 4;
  double window_s = 1.0;
  double train_stride_s = 0.25;  // sliding-window stride over training epochs
  std::size_t repeats = 30;
  std::uint64_t seed = 0;
  double feature_lo_hz = 6.0;
  double feature_hi_hz = 64.0;
  double feature_resolution_hz = 0.25;
  std::size_t cca_harmonics = 4;
  fuzzy::TrainConfig train;
  cstl::ExchangeConfig exchange;
  baselines::SubbandSpec subbands;
};

struct ExperimentSummary {
  std::vector<RepeatReport> repeats;
  double acc_mean = 0.0, acc_std = 0.0;
  double itr_mean = 0.0, itr_std = 0.0;
  std::size_t failures = 0;
};

// Runs cfg.repeats independent randomized splits, one per derived seed
// (cfg.seed + repeat index). A failing repeat is recorded and the run
// continues. Repeats fan out in parallel; each repeat runs serially inside.
ExperimentSummary run_experiment(const std::vector<Epoch>& trials, const FrequencyTable& table,
                                 const ExperimentConfig& cfg, Exec exec = default_exec());

// One split evaluated end to end (the body of run_experiment).
RepeatReport run_single(const std::vector<Epoch>& trials, const FrequencyTable& table,
                        const ExperimentConfig& cfg, std::uint64_t seed);

// report.txt (summary + per-repeat stats, includes timing) and trials.csv
// with (repeat, trial_id, true, predicted, correct) rows, deterministic for
// a fixed seed.
void write_report(const ExperimentSummary& s, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

// First window_s seconds of an epoch.
Epoch first_window(const Epoch& e, double window_s);

// Windowed feature dataset for the fuzzy decoder: all sliding windows of
// every epoch, in epoch order.
std::vector<fuzzy::Sample> feature_dataset(const std::vector<Epoch>& epochs,
                                           const ExperimentConfig& cfg,
                                           Exec exec = default_exec());

}  // namespace ssvep::eval
