// Unified command-line front end: dataset synthesis, preprocessing, EMD
// inspection, cross-stimulus reconstruction, decoder training, evaluation,
// baselines, and the streaming loop.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "ssvep/cstl.hpp"
#include "ssvep/emd.hpp"
#include "ssvep/epoch_io.hpp"
#include "ssvep/evaluation.hpp"
#include "ssvep/fuzzy.hpp"
#include "ssvep/kv.hpp"
#include "ssvep/log.hpp"
#include "ssvep/signal.hpp"
#include "ssvep/stream.hpp"
#include "ssvep/version.hpp"

namespace fs = std::filesystem;
using namespace ssvep;

namespace {

// Reproducibility record dropped into every output directory.
void write_run_manifest(const fs::path& dir, const std::string& subcommand,
                        const std::vector<std::pair<std::string, std::string>>& config,
                        const std::vector<fs::path>& inputs) {
  KvFile kv;
  kv.set("run", "tool", "ssvep");
  kv.set("run", "version", kVersion);
  kv.set("run", "subcommand", subcommand);
  for (const auto& [k, v] : config) kv.set("config", k, v);
  for (const auto& p : inputs) kv.set("inputs", p.string(), hash_file_hex(p));
  kv.save(dir / "run.manifest");
}

struct GenerateArgs {
  std::string out;
  std::size_t classes = 8;
  double f0 = 8.0, f_step = 1.0;
  double phase_step = 0.5 * std::numbers::pi;
  std::size_t trials = 6;
  double fs = 250.0, duration = 4.0;
  std::size_t channels = 8;
  double noise = 0.3;
  std::vector<double> harmonics{1.0, 0.5};
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  fs::create_directories(a.out);
  DatasetManifest m;
  m.fs_hz = a.fs;
  for (std::size_t j = 0; j < a.classes; ++j)
    m.table.entries.push_back({a.f0 + a.f_step * static_cast<double>(j),
                               a.phase_step * static_cast<double>(j), static_cast<int>(j)});
  m.table.validate();

  std::vector<double> gains(a.channels);
  for (std::size_t c = 0; c < a.channels; ++c)
    gains[c] = 1.0 - 0.5 * static_cast<double>(c) / static_cast<double>(std::max<std::size_t>(
                                                       1, a.channels));

  for (const auto& entry : m.table.entries) {
    for (std::uint32_t t = 0; t < a.trials; ++t) {
      const std::uint64_t trial_seed =
          a.seed + 100000ULL * static_cast<std::uint64_t>(entry.class_index) + t;
      const Epoch e = generate_ssvep(entry, a.harmonics, a.fs, a.duration, a.channels, a.noise,
                                     gains, trial_seed, t);
      const auto name = "class" + std::to_string(entry.class_index) + "_trial" +
                        std::to_string(t) + ".ssvep";
      write_epoch_file(e, fs::path(a.out) / name);
      m.trials.push_back({fs::path(a.out) / name, entry.class_index, t});
    }
  }
  write_manifest(m, fs::path(a.out) / "dataset.manifest");
  write_run_manifest(a.out, "generate",
                     {{"classes", std::to_string(a.classes)},
                      {"f0", format_double(a.f0)},
                      {"f_step", format_double(a.f_step)},
                      {"trials", std::to_string(a.trials)},
                      {"fs", format_double(a.fs)},
                      {"duration", format_double(a.duration)},
                      {"channels", std::to_string(a.channels)},
                      {"noise_sigma", format_double(a.noise)},
                      {"seed", std::to_string(a.seed)}},
                     {});
  std::cout << "wrote " << m.trials.size() << " trials to " << a.out << "\n";
  return 0;
}

struct PreprocessArgs {
  std::string manifest, out;
  double lo = 7.0, hi = 70.0, gstop = 40.0;
  double notch_q = 35.0;
  bool no_notch = false;
  double discard_s = 0.14;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const DatasetManifest in = read_manifest(a.manifest);
  fs::create_directories(a.out);
  DatasetManifest out = in;
  out.trials.clear();
  for (const TrialRef& ref : in.trials) {
    Epoch e = load_trial(in, ref);
    e = chebyshev_bandpass(e, a.lo, a.hi, a.gstop);
    if (!a.no_notch) e = notch_50hz(e, a.notch_q);
    if (a.discard_s > 0.0) e = discard_head(e, a.discard_s);
    const auto name = "class" + std::to_string(ref.class_index) + "_trial" +
                      std::to_string(ref.trial_id) + ".ssvep";
    write_epoch_file(e, fs::path(a.out) / name);
    out.trials.push_back({fs::path(a.out) / name, ref.class_index, ref.trial_id});
  }
  write_manifest(out, fs::path(a.out) / "dataset.manifest");
  write_run_manifest(a.out, "preprocess",
                     {{"manifest", a.manifest},
                      {"lo_hz", format_double(a.lo)},
                      {"hi_hz", format_double(a.hi)},
                      {"gstop_db", format_double(a.gstop)},
                      {"notch", a.no_notch ? "off" : "on"},
                      {"discard_s", format_double(a.discard_s)}},
                     {a.manifest});
  std::cout << "preprocessed " << out.trials.size() << " trials into " << a.out << "\n";
  return 0;
}

struct EmdArgs {
  std::string epoch, out;
  std::size_t max_imfs = 8;
  double sd_stop = 0.2;
  std::size_t max_iters = 50;
};

int cmd_emd(const EmdArgs& a) {
  const Epoch e = read_epoch_file(a.epoch);
  fs::create_directories(a.out);
  emd::SiftParams p;
  p.max_imfs = a.max_imfs;
  p.sd_stop = a.sd_stop;
  p.max_sift_iters = a.max_iters;
  const auto sets = emd::decompose_epoch(e, p);

  std::size_t max_k = 0;
  for (const auto& s : sets) max_k = std::max(max_k, s.count());

  // one epoch file per IMF index; channels with fewer IMFs contribute zeros.
  // trial_id encodes (trial, k) as trial*1000 + k; the residue rides at k=0.
  for (std::size_t k = 0; k <= max_k; ++k) {
    Epoch imf_epoch = e;
    imf_epoch.trial_id = e.trial_id * 1000 + static_cast<std::uint32_t>(k);
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      auto row = imf_epoch.data.row(c);
      const auto& set = sets[c];
      const std::vector<double>* src = nullptr;
      if (k == 0)
        src = &set.residue;
      else if (k <= set.count())
        src = &set.imfs[k - 1];
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = src ? (*src)[i] : 0.0;
    }
    const auto name = k == 0 ? std::string("residue.ssvep")
                             : "imf" + std::to_string(k) + ".ssvep";
    write_epoch_file(imf_epoch, fs::path(a.out) / name);
  }
  write_run_manifest(a.out, "emd",
                     {{"epoch", a.epoch},
                      {"max_imfs", std::to_string(a.max_imfs)},
                      {"sd_stop", format_double(a.sd_stop)}},
                     {a.epoch});
  std::cout << "wrote " << max_k << " IMFs plus residue to " << a.out << "\n";
  return 0;
}

struct ReconstructArgs {
  std::string manifest, out;
  std::vector<int> source_classes;
  double g_source = 0.0, g_target = 1.0;
  std::size_t n_harmonics = 4;
  std::size_t k_lo = 1, k_hi = 3;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const DatasetManifest in = read_manifest(a.manifest);
  fs::create_directories(a.out);

  std::vector<Epoch> source;
  for (const TrialRef& ref : in.trials)
    if (std::find(a.source_classes.begin(), a.source_classes.end(), ref.class_index) !=
        a.source_classes.end())
      source.push_back(load_trial(in, ref));
  if (source.empty()) throw std::runtime_error("reconstruct: no trials in the source classes");

  cstl::ExchangeConfig cfg;
  cfg.g_source = a.g_source;
  cfg.g_target = a.g_target;
  cfg.n_harmonics = a.n_harmonics;
  cfg.k_lo = a.k_lo;
  cfg.k_hi = a.k_hi;
  const auto out_epochs = cstl::build_training_set(source, in.table, a.source_classes, cfg);

  DatasetManifest out;
  out.table = in.table;
  out.fs_hz = in.fs_hz;
  std::vector<std::uint32_t> next_trial(in.table.size(), 0);
  for (std::size_t i = 0; i < out_epochs.size(); ++i) {
    const Epoch& e = out_epochs[i];
    const auto cls = static_cast<std::size_t>(e.stimulus.class_index);
    const bool real = i < source.size();
    const auto name = std::string(real ? "real" : "recon") + "_class" + std::to_string(cls) +
                      "_n" + std::to_string(next_trial[cls]) + ".ssvep";
    Epoch renumbered = e;
    renumbered.trial_id = next_trial[cls];
    write_epoch_file(renumbered, fs::path(a.out) / name);
    out.trials.push_back({fs::path(a.out) / name, e.stimulus.class_index, next_trial[cls]});
    ++next_trial[cls];
  }
  write_manifest(out, fs::path(a.out) / "dataset.manifest");

  write_run_manifest(a.out, "reconstruct",
                     {{"manifest", a.manifest},
                      {"g_source", format_double(a.g_source)},
                      {"g_target", format_double(a.g_target)},
                      {"n_harmonics", std::to_string(a.n_harmonics)},
                      {"imf_range", std::to_string(a.k_lo) + ":" + std::to_string(a.k_hi)}},
                     {a.manifest});
  std::cout << "wrote " << out_epochs.size() << " epochs (" << source.size() << " real, "
            << out_epochs.size() - source.size() << " reconstructed) to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest, out_model;
  std::size_t rules = 5;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  double window_s = 1.0, stride_s = 0.25;
  double f_lo = 6.0, f_hi = 64.0, resolution = 0.25;
  double early_stop_loss = 0.0;
};

int cmd_train(const TrainArgs& a) {
  const DatasetManifest m = read_manifest(a.manifest);
  const auto epochs = load_all_trials(m);
  if (epochs.empty()) throw std::runtime_error("train: manifest lists no trials");

  eval::ExperimentConfig ecfg;
  ecfg.window_s = a.window_s;
  ecfg.train_stride_s = a.stride_s;
  ecfg.feature_lo_hz = a.f_lo;
  ecfg.feature_hi_hz = a.f_hi;
  ecfg.feature_resolution_hz = a.resolution;
  const auto dataset = eval::feature_dataset(epochs, ecfg);

  fuzzy::TrainConfig cfg;
  cfg.rules = a.rules;
  cfg.epochs_max = a.epochs;
  cfg.lr = a.lr;
  cfg.batch_size = std::min(a.batch, dataset.size());
  cfg.seed = a.seed;
  cfg.early_stop_loss = a.early_stop_loss;
  const auto model = fuzzy::train(dataset, m.table.size(), cfg);
  fuzzy::save_model(model, a.out_model);

  const fs::path out_dir = fs::path(a.out_model).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(a.out_model).parent_path();
  {
    std::ofstream loss(out_dir / "loss_curve.csv");
    loss << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < model.loss_curve.size(); ++i)
      loss << i << "," << format_double(model.loss_curve[i]) << "\n";
  }
  {
    std::ofstream centers(out_dir / "rule_centers.csv");
    centers << "rule,dim,center\n";
    for (std::size_t r = 0; r < model.n_rules; ++r)
      for (std::size_t d = 0; d < model.dim_q; ++d)
        centers << r << "," << d << "," << format_double(model.centers[r * model.dim_q + d])
                << "\n";
  }
  write_run_manifest(out_dir, "train",
                     {{"manifest", a.manifest},
                      {"rules", std::to_string(a.rules)},
                      {"epochs", std::to_string(a.epochs)},
                      {"lr", format_double(a.lr)},
                      {"batch", std::to_string(a.batch)},
                      {"window_s", format_double(a.window_s)},
                      {"stride_s", format_double(a.stride_s)},
                      {"seed", std::to_string(a.seed)}},
                     {a.manifest});
  std::cout << "trained " << model.n_rules << "-rule model on " << dataset.size()
            << " windows, final loss " << model.loss_curve.back() << ", saved to "
            << a.out_model << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string manifest, method = "fuzzy", out;
  std::size_t n_source = 4;
  double window_s = 1.0, stride_s = 0.25;
  std::size_t repeats = 30;
  std::uint64_t seed = 0;
  std::size_t rules = 5;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 64;
  double early_stop_loss = 1e-3;
  double g_source = 0.0, g_target = 1.0;
  std::size_t n_harmonics = 4;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const DatasetManifest m = read_manifest(a.manifest);
  const auto trials = load_all_trials(m);

  eval::ExperimentConfig cfg;
  cfg.method = eval::method_from_string(a.method);
  cfg.n_source = a.n_source;
  cfg.window_s = a.window_s;
  cfg.train_stride_s = a.stride_s;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.train.rules = a.rules;
  cfg.train.epochs_max = a.epochs;
  cfg.train.lr = a.lr;
  cfg.train.batch_size = a.batch;
  cfg.train.early_stop_loss = a.early_stop_loss;
  cfg.exchange.g_source = a.g_source;
  cfg.exchange.g_target = a.g_target;
  cfg.exchange.n_harmonics = a.n_harmonics;

  const auto summary = eval::run_experiment(trials, m.table, cfg);
  fs::create_directories(a.out);
  eval::write_report(summary, cfg, a.out);
  write_run_manifest(a.out, "evaluate",
                     {{"manifest", a.manifest},
                      {"method", a.method},
                      {"n_source", std::to_string(a.n_source)},
                      {"window_s", format_double(a.window_s)},
                      {"stride_s", format_double(a.stride_s)},
                      {"repeats", std::to_string(a.repeats)},
                      {"rules", std::to_string(a.rules)},
                      {"seed", std::to_string(a.seed)}},
                     {a.manifest});

  std::cout << a.method << ": acc " << summary.acc_mean << " +- " << summary.acc_std << ", itr "
            << summary.itr_mean << " +- " << summary.itr_std << " bits/min, " << summary.failures
            << " failed repeats\n";
  return summary.failures == 0 ? 0 : 1;
}

struct StreamArgs {
  std::string manifest, host = "127.0.0.1";
  std::uint16_t port = 0;
  int chunk_ms = 40;
  bool realtime = false;
};

int cmd_stream(const StreamArgs& a) {
  const DatasetManifest m = read_manifest(a.manifest);
  const auto stats = stream::stream_producer(m, a.host, a.port, a.chunk_ms, a.realtime);
  std::cout << "sent " << stats.trials_sent << " trials, " << stats.frames_sent << " frames, "
            << stats.bytes_sent << " bytes\n";
  return 0;
}

struct ServeArgs {
  std::string model, manifest;
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;
  std::string feedback_host = "127.0.0.1";
  std::uint16_t feedback_port = 9100;
  double window_s = 2.5;
  double fs = 500.0;
};

int cmd_serve(const ServeArgs& a) {
  const auto model = fuzzy::load_model(a.model);
  const DatasetManifest m = read_manifest(a.manifest);
  stream::ServiceConfig cfg;
  cfg.listen_host = a.listen_host;
  cfg.listen_port = a.listen_port;
  cfg.feedback_host = a.feedback_host;
  cfg.feedback_port = a.feedback_port;
  cfg.window_s = a.window_s;
  cfg.fs_hz = a.fs;
  cfg.on_listening = [](std::uint16_t p) {
    std::cout << "listening on port " << p << "\n" << std::flush;
  };
  const auto stats = stream::decode_service(model, m.table, cfg);
  std::cout << "received " << stats.frames_received << " frames ("
            << stats.frames_malformed << " malformed), decoded " << stats.trials_decoded
            << " trials\n";
  return 0;
}

struct ListenArgs {
  std::string manifest;
  std::uint16_t port = 9100;
  double timeout_s = 60.0;
};

int cmd_listen(const ListenArgs& a) {
  const DatasetManifest m = read_manifest(a.manifest);
  const auto res = stream::feedback_listener(
      a.port, m.trials, a.timeout_s,
      [](std::uint16_t p) { std::cout << "collecting feedback on port " << p << "\n" << std::flush; });
  std::cout << "received " << res.received.size() << " results, " << res.missing
            << " missing, online accuracy " << res.accuracy << "\n";
  return 0;
}

struct TTestArgs {
  std::string file_a, file_b;
};

std::vector<double> read_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

int cmd_ttest(const TTestArgs& a) {
  const auto res = eval::paired_ttest(read_column(a.file_a), read_column(a.file_b));
  std::cout << "t = " << res.t << ", p = " << res.p << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMD-based cross-stimulus SSVEP decoding pipeline"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key/value config file; flags override file values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cg = app.add_subcommand("generate", "synthesize a labeled SSVEP dataset");
  cg->add_option("--out", gen.out, "output directory")->required();
  cg->add_option("--classes", gen.classes, "number of stimulus classes");
  cg->add_option("--f0", gen.f0, "lowest stimulus frequency (Hz)");
  cg->add_option("--f-step", gen.f_step, "frequency step between classes (Hz)");
  cg->add_option("--phase-step", gen.phase_step, "phase step between classes (rad)");
  cg->add_option("--trials", gen.trials, "trials per class");
  cg->add_option("--fs", gen.fs, "sampling rate (Hz)");
  cg->add_option("--duration", gen.duration, "trial duration (s)");
  cg->add_option("--channels", gen.channels, "channel count");
  cg->add_option("--noise-sigma", gen.noise, "additive Gaussian noise sigma");
  cg->add_option("--harmonics", gen.harmonics, "harmonic amplitudes");
  cg->add_option("--seed", gen.seed, "experiment seed")->required();

  PreprocessArgs pre;
  auto* cp = app.add_subcommand("preprocess", "bandpass + notch + head discard");
  cp->add_option("--manifest", pre.manifest, "dataset manifest")->required();
  cp->add_option("--out", pre.out, "output directory")->required();
  cp->add_option("--lo", pre.lo, "passband low edge (Hz)");
  cp->add_option("--hi", pre.hi, "passband high edge (Hz)");
  cp->add_option("--gstop", pre.gstop, "stopband attenuation (dB)");
  cp->add_option("--notch-q", pre.notch_q, "notch quality factor");
  cp->add_flag("--no-notch", pre.no_notch, "skip the 50 Hz notch");
  cp->add_option("--discard-s", pre.discard_s, "leading seconds to discard");

  EmdArgs emda;
  auto* ce = app.add_subcommand("emd", "decompose one epoch file into IMF dumps");
  ce->add_option("--epoch", emda.epoch, "epoch file")->required();
  ce->add_option("--out", emda.out, "output directory")->required();
  ce->add_option("--max-imfs", emda.max_imfs, "IMF cap");
  ce->add_option("--sd-stop", emda.sd_stop, "sifting SD stop threshold");
  ce->add_option("--max-iters", emda.max_iters, "sifting iteration cap");

  ReconstructArgs rec;
  auto* cr = app.add_subcommand("reconstruct", "build a cross-stimulus training set");
  cr->add_option("--manifest", rec.manifest, "dataset manifest")->required();
  cr->add_option("--source-classes", rec.source_classes, "classes with real data")->required();
  cr->add_option("--out-dir", rec.out, "output directory")->required();
  cr->add_option("--g-source", rec.g_source, "gain kept on source harmonics");
  cr->add_option("--g-target", rec.g_target, "gain of injected target harmonics");
  cr->add_option("--n-harmonics", rec.n_harmonics, "harmonics per set");
  cr->add_option("--imf-lo", rec.k_lo, "first IMF used (1-based)");
  cr->add_option("--imf-hi", rec.k_hi, "last IMF used (1-based)");

  TrainArgs tr;
  auto* ct = app.add_subcommand("train", "train the fuzzy decoder on a manifest");
  ct->add_option("--manifest", tr.manifest, "training-set manifest")->required();
  ct->add_option("--rules", tr.rules, "fuzzy rule count");
  ct->add_option("--epochs", tr.epochs, "training epoch cap");
  ct->add_option("--lr", tr.lr, "learning rate");
  ct->add_option("--batch", tr.batch, "batch size");
  ct->add_option("--window-s", tr.window_s, "analysis window (s)");
  ct->add_option("--stride-s", tr.stride_s, "sliding-window stride (s)");
  ct->add_option("--f-lo", tr.f_lo, "feature band low edge (Hz)");
  ct->add_option("--f-hi", tr.f_hi, "feature band high edge (Hz)");
  ct->add_option("--resolution", tr.resolution, "FFT feature resolution (Hz)");
  ct->add_option("--early-stop-loss", tr.early_stop_loss, "stop below this mean loss (0 = off)");
  ct->add_option("--seed", tr.seed, "experiment seed")->required();
  ct->add_option("--out-model", tr.out_model, "checkpoint path")->required();

  EvaluateArgs ev;
  auto* cv = app.add_subcommand("evaluate", "randomized source/target evaluation");
  cv->add_option("--manifest", ev.manifest, "dataset manifest")->required();
  cv->add_option("--method", ev.method, "fuzzy|cca|fbcca|ecca|emd-ecca");
  cv->add_option("--n-source", ev.n_source, "source class count");
  cv->add_option("--window-s", ev.window_s, "analysis window (s)");
  cv->add_option("--stride-s", ev.stride_s, "training window stride (s)");
  cv->add_option("--repeats", ev.repeats, "randomized repeats");
  cv->add_option("--rules", ev.rules, "fuzzy rule count");
  cv->add_option("--epochs", ev.epochs, "training epoch cap");
  cv->add_option("--lr", ev.lr, "learning rate");
  cv->add_option("--batch", ev.batch, "batch size");
  cv->add_option("--early-stop-loss", ev.early_stop_loss, "stop below this mean loss (0 = off)");
  cv->add_option("--g-source", ev.g_source, "gain kept on source harmonics");
  cv->add_option("--g-target", ev.g_target, "gain of injected target harmonics");
  cv->add_option("--n-harmonics", ev.n_harmonics, "harmonics per set");
  cv->add_option("--seed", ev.seed, "experiment seed")->required();
  cv->add_option("--out", ev.out, "report directory")->required();

  EvaluateArgs bl;
  auto* cb = app.add_subcommand("baseline", "reference decoders on the same harness");
  cb->add_option("--method", bl.method, "cca|fbcca|ecca|emd-ecca")->required();
  cb->add_option("--manifest", bl.manifest, "dataset manifest")->required();
  cb->add_option("--window-s", bl.window_s, "analysis window (s)");
  cb->add_option("--n-source", bl.n_source, "source class count (emd-ecca)");
  cb->add_option("--repeats", bl.repeats, "randomized repeats");
  cb->add_option("--n-harmonics", bl.n_harmonics, "reference harmonics");
  cb->add_option("--seed", bl.seed, "experiment seed")->required();
  cb->add_option("--out", bl.out, "report directory")->required();

  StreamArgs st;
  auto* cs = app.add_subcommand("stream", "stream manifest trials to a decode service");
  cs->add_option("--manifest", st.manifest, "dataset manifest")->required();
  cs->add_option("--host", st.host, "service host");
  cs->add_option("--port", st.port, "service port")->required();
  cs->add_option("--chunk-ms", st.chunk_ms, "chunk duration (ms)");
  cs->add_flag("--realtime", st.realtime, "pace frames against the wall clock");

  ServeArgs sv;
  auto* cd = app.add_subcommand("serve", "run the online decode service");
  cd->add_option("--model", sv.model, "fuzzy model checkpoint")->required();
  cd->add_option("--manifest", sv.manifest, "manifest carrying the frequency table")->required();
  cd->add_option("--listen-host", sv.listen_host, "bind address");
  cd->add_option("--listen-port", sv.listen_port, "bind port (0 = ephemeral)");
  cd->add_option("--feedback-host", sv.feedback_host, "feedback datagram host");
  cd->add_option("--feedback-port", sv.feedback_port, "feedback datagram port");
  cd->add_option("--window-s", sv.window_s, "decode window (s)");
  cd->add_option("--fs", sv.fs, "stream sampling rate (Hz)");

  ListenArgs li;
  auto* cl = app.add_subcommand("listen", "collect feedback datagrams and score them");
  cl->add_option("--manifest", li.manifest, "manifest with the expected trials")->required();
  cl->add_option("--port", li.port, "feedback port (0 = ephemeral)");
  cl->add_option("--timeout-s", li.timeout_s, "overall timeout (s)");

  TTestArgs tt;
  auto* cx = app.add_subcommand("ttest", "paired t-test between two value files");
  cx->add_option("--a", tt.file_a, "first value file (one number per line)")->required();
  cx->add_option("--b", tt.file_b, "second value file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*cg) return cmd_generate(gen);
    if (*cp) return cmd_preprocess(pre);
    if (*ce) return cmd_emd(emda);
    if (*cr) return cmd_reconstruct(rec);
    if (*ct) return cmd_train(tr);
    if (*cv) return cmd_evaluate(ev);
    if (*cb) {
      if (bl.method == "fuzzy")
        throw std::invalid_argument("baseline: use the evaluate subcommand for method fuzzy");
      return cmd_evaluate(bl);
    }
    if (*cs) return cmd_stream(st);
    if (*cd) return cmd_serve(sv);
    if (*cl) return cmd_listen(li);
    if (*cx) return cmd_ttest(tt);
  } catch (const std::invalid_argument& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 2;
}
