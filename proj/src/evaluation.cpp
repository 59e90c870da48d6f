#include "ssvep/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "ssvep/kv.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"

namespace ssvep::eval {

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 10.0 * eps) break;
  }
  return h;
}

double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_two_sided_p(double t, double dof) {
  const double x = dof / (dof + t * t);
  return ibeta(dof / 2.0, 0.5, x);
}

struct SplitData {
  std::vector<const Epoch*> train_source;  // source classes minus held-out trials
  std::vector<const Epoch*> test;          // held-out source trials + all target trials
};

SplitData apply_split(const std::vector<Epoch>& trials, const SplitPlan& plan) {
  SplitData out;
  auto held = [&](int cls, std::uint32_t trial) {
    for (std::size_t i = 0; i < plan.source_classes.size(); ++i)
      if (plan.source_classes[i] == cls) return plan.held_out[i] == trial;
    return false;
  };
  auto is_source = [&](int cls) {
    return std::find(plan.source_classes.begin(), plan.source_classes.end(), cls) !=
           plan.source_classes.end();
  };
  for (const Epoch& e : trials) {
    const int cls = e.stimulus.class_index;
    if (is_source(cls)) {
      if (held(cls, e.trial_id))
        out.test.push_back(&e);
      else
        out.train_source.push_back(&e);
    } else {
      out.test.push_back(&e);
    }
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SplitPlan split_source_target(const FrequencyTable& table, std::size_t n_source,
                              std::size_t n_trials, std::uint64_t seed) {
  table.validate();
  if (n_source < 1 || n_source >= table.size())
    throw std::invalid_argument("split: n_source must be in [1, n_classes)");
  if (n_trials < 2) throw std::invalid_argument("split: need at least 2 trials per class");

  Rng rng(seed, "split_source_target");
  const auto picks = rng.sample_without_replacement(table.size(), n_source);

  SplitPlan plan;
  plan.seed = seed;
  std::vector<bool> is_source(table.size(), false);
  for (std::size_t p : picks) is_source[p] = true;
  for (std::size_t j = 0; j < table.size(); ++j)
    (is_source[j] ? plan.source_classes : plan.target_classes).push_back(static_cast<int>(j));
  for (std::size_t i = 0; i < plan.source_classes.size(); ++i)
    plan.held_out.push_back(static_cast<std::uint32_t>(rng.below(n_trials)));
  return plan;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& truth) {
  if (preds.empty() || preds.size() != truth.size())
    throw std::invalid_argument("accuracy: empty or mismatched inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double itr_bits_per_min(double p_acc, std::size_t n_classes, double t_total_s) {
  if (n_classes < 2) throw std::invalid_argument("itr: need at least 2 classes");
  if (!(p_acc >= 0.0 && p_acc <= 1.0)) throw std::invalid_argument("itr: accuracy outside [0,1]");
  if (!(t_total_s > 0.0)) throw std::invalid_argument("itr: non-positive trial time");

  const double n = static_cast<double>(n_classes);
  if (std::abs(p_acc - 1.0 / n) <= 4.0 * std::numeric_limits<double>::epsilon())
    return 0.0;  // chance level carries zero bits
  double bits = std::log2(n);
  if (p_acc > 0.0) bits += p_acc * std::log2(p_acc);
  if (p_acc < 1.0) bits += (1.0 - p_acc) * std::log2((1.0 - p_acc) / (n - 1.0));
  return 60.0 / t_total_s * bits;
}

TTest paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 3)
    throw std::invalid_argument("paired_ttest: need equal lengths >= 3");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  if (var <= 0.0) throw std::invalid_argument("paired_ttest: zero-variance differences");

  TTest out;
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  out.p = student_two_sided_p(out.t, static_cast<double>(n - 1));
  return out;
}

Method method_from_string(const std::string& s) {
  if (s == "fuzzy") return Method::fuzzy;
  if (s == "cca") return Method::cca;
  if (s == "fbcca") return Method::fbcca;
  if (s == "ecca") return Method::ecca;
  if (s == "emd-ecca" || s == "emd_ecca") return Method::emd_ecca;
  throw std::invalid_argument("unknown method: " + s);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::fuzzy: return "fuzzy";
    case Method::cca: return "cca";
    case Method::fbcca: return "fbcca";
    case Method::ecca: return "ecca";
    case Method::emd_ecca: return "emd-ecca";
  }
  return "?";
}

Epoch first_window(const Epoch& e, double window_s) {
  const auto win_n = static_cast<std::size_t>(std::llround(window_s * e.fs_hz));
  if (win_n < 2 || win_n > e.n_samples())
    throw std::invalid_argument("first_window: window does not fit epoch");
  Epoch out;
  out.fs_hz = e.fs_hz;
  out.stimulus = e.stimulus;
  out.trial_id = e.trial_id;
  out.data = Matrix(e.n_channels(), win_n);
  for (std::size_t c = 0; c < e.n_channels(); ++c) {
    const auto src = e.data.row(c);
    auto dst = out.data.row(c);
    for (std::size_t i = 0; i < win_n; ++i) dst[i] = src[i];
  }
  return out;
}

std::vector<fuzzy::Sample> feature_dataset(const std::vector<Epoch>& epochs,
                                           const ExperimentConfig& cfg, Exec exec) {
  std::vector<std::vector<fuzzy::Sample>> per_epoch(epochs.size());
  parallel_for(
      epochs.size(),
      [&](std::size_t i) {
        const auto windows = sliding_windows(epochs[i], cfg.window_s, cfg.train_stride_s);
        per_epoch[i].reserve(windows.size());
        for (const Epoch& w : windows)
          per_epoch[i].emplace_back(
              fuzzy::fft_features(w, cfg.feature_lo_hz, cfg.feature_hi_hz,
                                  cfg.feature_resolution_hz),
              w.stimulus.class_index);
      },
      exec);
  std::vector<fuzzy::Sample> out;
  for (auto& v : per_epoch)
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return out;
}

RepeatReport run_single(const std::vector<Epoch>& trials, const FrequencyTable& table,
                        const ExperimentConfig& cfg, std::uint64_t seed) {
  RepeatReport rep;
  rep.seed = seed;
  const double t0 = now_s();

  std::map<int, std::size_t> per_class;
  for (const Epoch& e : trials) {
    if (e.fs_hz != trials.front().fs_hz)
      throw std::invalid_argument("run: trials mix sampling rates");
    per_class[e.stimulus.class_index]++;
  }
  std::size_t n_trials = trials.size();
  for (const auto& entry : table.entries) {
    const auto it = per_class.find(entry.class_index);
    if (it == per_class.end()) throw std::invalid_argument("run: class without trials");
    n_trials = std::min(n_trials, it->second);
  }

  // ecca is the fully supervised (no-transfer) reference: every class is a
  // source, one held-out trial per class forms the test set
  SplitPlan plan;
  SplitData split;
  if (cfg.method == Method::ecca) {
    Rng rng(seed, "split_supervised");
    plan.seed = seed;
    for (const auto& entry : table.entries) {
      plan.source_classes.push_back(entry.class_index);
      plan.held_out.push_back(static_cast<std::uint32_t>(rng.below(n_trials)));
    }
    split = apply_split(trials, plan);
  } else {
    plan = split_source_target(table, cfg.n_source, n_trials, seed);
    split = apply_split(trials, plan);
  }

  std::vector<Epoch> train_source;
  train_source.reserve(split.train_source.size());
  for (const Epoch* e : split.train_source) train_source.push_back(*e);

  std::vector<int> preds, truth;
  std::vector<double> latencies;
  const auto classify_all = [&](auto&& classify_one) {
    for (const Epoch* e : split.test) {
      const Epoch win = first_window(*e, cfg.window_s);
      const double s0 = now_s();
      const int pred = classify_one(win);
      const double dt = now_s() - s0;
      preds.push_back(pred);
      truth.push_back(e->stimulus.class_index);
      latencies.push_back(dt);
      rep.trials.push_back({e->trial_id, e->stimulus.class_index, pred, dt});
    }
  };

  const auto win_samples =
      static_cast<std::size_t>(std::llround(cfg.window_s * trials.front().fs_hz));

  switch (cfg.method) {
    case Method::fuzzy: {
      auto training =
          cstl::build_training_set(train_source, table, plan.source_classes, cfg.exchange,
                                   Exec::serial);
      auto dataset = feature_dataset(training, cfg, Exec::serial);
      fuzzy::TrainConfig tc = cfg.train;
      tc.seed = seed;
      tc.batch_size = std::min(tc.batch_size, dataset.size());
      const auto model = fuzzy::train(dataset, table.size(), tc, Exec::serial);
      classify_all([&](const Epoch& w) {
        return fuzzy::predict(model,
                              fuzzy::fft_features(w, cfg.feature_lo_hz, cfg.feature_hi_hz,
                                                  cfg.feature_resolution_hz))
            .class_index;
      });
      break;
    }
    case Method::cca: {
      const auto refs =
          baselines::build_references(table, cfg.cca_harmonics, trials.front().fs_hz, win_samples);
      classify_all([&](const Epoch& w) { return baselines::cca_classify(w, refs); });
      break;
    }
    case Method::fbcca: {
      const auto refs =
          baselines::build_references(table, cfg.cca_harmonics, trials.front().fs_hz, win_samples);
      classify_all([&](const Epoch& w) { return baselines::fbcca_classify(w, refs, cfg.subbands); });
      break;
    }
    case Method::ecca:
    case Method::emd_ecca: {
      std::vector<Epoch> pool;
      if (cfg.method == Method::emd_ecca) {
        pool = cstl::build_training_set(train_source, table, plan.source_classes, cfg.exchange,
                                        Exec::serial);
      } else {
        pool = train_source;
      }
      std::vector<Epoch> windows;
      windows.reserve(pool.size());
      for (const Epoch& e : pool) windows.push_back(first_window(e, cfg.window_s));
      const auto templates = baselines::class_mean_templates(windows, table);
      const auto refs =
          baselines::build_references(table, cfg.cca_harmonics, trials.front().fs_hz, win_samples);
      classify_all(
          [&](const Epoch& w) { return baselines::ecca_classify(w, templates, refs); });
      break;
    }
  }

  rep.acc = accuracy(preds, truth);
  rep.t_inference_s = median(latencies);
  rep.itr = std::max(
      0.0, itr_bits_per_min(rep.acc, table.size(), cfg.window_s + rep.t_inference_s));
  rep.wall_time_s = now_s() - t0;
  return rep;
}

ExperimentSummary run_experiment(const std::vector<Epoch>& trials, const FrequencyTable& table,
                                 const ExperimentConfig& cfg, Exec exec) {
  if (table.size() < 2) throw std::invalid_argument("run_experiment: need at least 2 classes");
  ExperimentSummary sum;
  sum.repeats.resize(cfg.repeats);
  parallel_for(
      cfg.repeats,
      [&](std::size_t r) {
        const std::uint64_t seed = cfg.seed + r;
        try {
          sum.repeats[r] = run_single(trials, table, cfg, seed);
        } catch (const std::exception& ex) {
          sum.repeats[r].seed = seed;
          sum.repeats[r].failed = true;
          sum.repeats[r].error = ex.what();
        }
      },
      exec);

  double acc = 0.0, itr = 0.0;
  std::size_t n = 0;
  for (const auto& r : sum.repeats) {
    if (r.failed) {
      ++sum.failures;
      continue;
    }
    acc += r.acc;
    itr += r.itr;
    ++n;
  }
  if (n > 0) {
    sum.acc_mean = acc / static_cast<double>(n);
    sum.itr_mean = itr / static_cast<double>(n);
    double va = 0.0, vi = 0.0;
    for (const auto& r : sum.repeats) {
      if (r.failed) continue;
      va += (r.acc - sum.acc_mean) * (r.acc - sum.acc_mean);
      vi += (r.itr - sum.itr_mean) * (r.itr - sum.itr_mean);
    }
    if (n > 1) {
      sum.acc_std = std::sqrt(va / static_cast<double>(n - 1));
      sum.itr_std = std::sqrt(vi / static_cast<double>(n - 1));
    }
  }
  return sum;
}

void write_report(const ExperimentSummary& s, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  KvFile kv;
  kv.set("report", "method", method_name(cfg.method));
  kv.set_int("report", "repeats", static_cast<std::int64_t>(s.repeats.size()));
  kv.set_int("report", "failures", static_cast<std::int64_t>(s.failures));
  kv.set_int("report", "n_source", static_cast<std::int64_t>(cfg.n_source));
  kv.set_double("report", "window_s", cfg.window_s);
  kv.set_int("report", "seed", static_cast<std::int64_t>(cfg.seed));
  kv.set_double("report", "acc_mean", s.acc_mean);
  kv.set_double("report", "acc_std", s.acc_std);
  kv.set_double("report", "itr_mean_bits_per_min", s.itr_mean);
  kv.set_double("report", "itr_std_bits_per_min", s.itr_std);
  for (std::size_t r = 0; r < s.repeats.size(); ++r) {
    const auto& rep = s.repeats[r];
    const std::string sec = "repeat_" + std::to_string(r);
    kv.set_int(sec, "seed", static_cast<std::int64_t>(rep.seed));
    if (rep.failed) {
      kv.set(sec, "failed", "1");
      kv.set(sec, "error", rep.error);
      continue;
    }
    kv.set(sec, "failed", "0");
    kv.set_double(sec, "acc", rep.acc);
    kv.set_double(sec, "itr_bits_per_min", rep.itr);
    kv.set_double(sec, "t_inference_s", rep.t_inference_s);
    kv.set_double(sec, "wall_time_s", rep.wall_time_s);
  }
  kv.save(out_dir / "report.txt");

  // deterministic per-trial records; timing deliberately stays out
  std::string csv = "repeat,trial_id,true_class,predicted,correct\n";
  for (std::size_t r = 0; r < s.repeats.size(); ++r)
    for (const auto& t : s.repeats[r].trials)
      csv += std::to_string(r) + "," + std::to_string(t.trial_id) + "," +
             std::to_string(t.true_class) + "," + std::to_string(t.predicted) + "," +
             (t.true_class == t.predicted ? "1" : "0") + "\n";
  std::ofstream out(out_dir / "trials.csv", std::ios::binary | std::ios::trunc);
  out << csv;
}

}  // namespace ssvep::eval
