#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssvep/types.hpp"

namespace ssvep {

// Epoch binary format, little-endian:
//   magic "SSVEPE01" (8 bytes)
//   u32 n_channels, u32 n_samples
//   f32 fs_hz, f32 stimulus_freq_hz, f32 stimulus_phase_rad
//   u32 class_index, u32 trial_id
//   n_channels * n_samples f32 samples, channel-major
// Samples and stimulus fields are quantized to f32 on disk.
void write_epoch_file(const Epoch& e, const std::filesystem::path& path);
Epoch read_epoch_file(const std::filesystem::path& path);

// One trial belonging to a dataset: either an epoch binary or a CSV with one
// row per sample and one column per channel (metadata from the manifest).
struct TrialRef {
  std::filesystem::path path;
  int class_index = 0;
  std::uint32_t trial_id = 0;
};

// Dataset manifest: the frequency table plus trial files grouped by class.
//
//   [dataset]
//   fs_hz = 250            # required only when CSV trials are listed
//   [table]
//   freqs = 8, 9, 10
//   phases = 0, 1.5707963267948966, 3.141592653589793
//   [trials]
//   class_0 = trial00.ssvep, trial01.ssvep
//   class_1 = ...
//
// Relative trial paths resolve against the manifest's directory.
struct DatasetManifest {
  FrequencyTable table;
  double fs_hz = 0.0;
  std::vector<TrialRef> trials;

  std::vector<TrialRef> trials_of_class(int class_index) const;
  std::size_t min_trials_per_class() const;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Loads one trial; dispatches on the ".csv" extension.
Epoch load_trial(const DatasetManifest& m, const TrialRef& ref);
std::vector<Epoch> load_all_trials(const DatasetManifest& m);

// CSV trial import: one row per sample, columns = channels.
Epoch read_epoch_csv(const std::filesystem::path& path, double fs_hz,
                     const StimulusSpec& stimulus, std::uint32_t trial_id);

}  // namespace ssvep
