#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ssvep/epoch_io.hpp"
#include "ssvep/kv.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/signal.hpp"

using namespace ssvep;

namespace {

std::filesystem::path tmp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "ssvep_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

Epoch random_epoch(std::uint64_t seed, std::size_t nch = 3, std::size_t ns = 40) {
  Rng rng(seed, "io_test");
  Epoch e;
  e.fs_hz = 250.0;
  e.stimulus = {9.5, 0.5, 4};
  e.trial_id = 12;
  e.data = Matrix(nch, ns);
  // keep samples exactly representable in f32 so the roundtrip is identity
  for (double& v : e.data.values()) v = static_cast<float>(rng.normal());
  return e;
}

}  // namespace

TEST_CASE("epoch file roundtrip is field-identical") {
  const auto path = tmp_dir() / "epoch_roundtrip.ssvep";
  const Epoch e = random_epoch(1);
  write_epoch_file(e, path);
  const Epoch r = read_epoch_file(path);
  CHECK(r.fs_hz == e.fs_hz);
  CHECK(r.stimulus.freq_hz == e.stimulus.freq_hz);
  CHECK(r.stimulus.phase_rad == e.stimulus.phase_rad);
  CHECK(r.stimulus.class_index == e.stimulus.class_index);
  CHECK(r.trial_id == e.trial_id);
  CHECK(r.data == e.data);
}

TEST_CASE("epoch file size matches the header arithmetic") {
  const auto path = tmp_dir() / "epoch_size.ssvep";
  Epoch e;
  e.fs_hz = 250.0;
  e.data = Matrix(2, 3, 1.0);
  write_epoch_file(e, path);
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 4 + 4 + 4 + 4 + 4 + 4 + 2 * 3 * 4);
}

TEST_CASE("bad magic and truncation are rejected") {
  const auto good = tmp_dir() / "epoch_good.ssvep";
  write_epoch_file(random_epoch(2), good);

  const auto bad = tmp_dir() / "epoch_bad.ssvep";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTMAGIC" << std::string(64, 'x');
  }
  CHECK_THROWS(read_epoch_file(bad));

  const auto trunc = tmp_dir() / "epoch_trunc.ssvep";
  {
    std::ifstream in(good, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(trunc, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size() - 7));
  }
  CHECK_THROWS(read_epoch_file(trunc));
}

TEST_CASE("non-finite samples never reach disk") {
  Epoch e = random_epoch(3);
  e.data(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(write_epoch_file(e, tmp_dir() / "epoch_nan.ssvep"));
}

TEST_CASE("kv files parse and serialize stably") {
  const std::string text =
      "# a comment\n[table]\nfreqs = 8, 9, 10\nname = demo\n\n[empty]\n";
  const KvFile kv = KvFile::parse(text);
  CHECK(kv.get_double_list("table", "freqs") == std::vector<double>{8.0, 9.0, 10.0});
  CHECK(kv.get("table", "name") == "demo");
  CHECK(kv.has_section("empty"));
  CHECK_THROWS(kv.get("table", "missing"));

  const KvFile again = KvFile::parse(kv.serialize());
  CHECK(again.serialize() == kv.serialize());
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 159.65784284662086, -4.25e-17, 0.0})
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("manifest roundtrip with binary and csv trials") {
  const auto dir = tmp_dir() / "manifest";
  std::filesystem::create_directories(dir);

  DatasetManifest m;
  m.fs_hz = 250.0;
  m.table.entries = {{8.0, 0.0, 0}, {9.0, 0.5, 1}};
  for (int cls = 0; cls < 2; ++cls)
    for (std::uint32_t t = 0; t < 2; ++t) {
      Epoch e = generate_ssvep(m.table.entries[cls], {1.0}, 250.0, 1.0, 2, 0.1, {1.0, 1.0},
                               cls * 10 + t, t);
      const auto p = dir / ("c" + std::to_string(cls) + "_t" + std::to_string(t) + ".ssvep");
      write_epoch_file(e, p);
      m.trials.push_back({p, cls, t});
    }
  // one extra csv trial for class 0
  {
    std::ofstream csv(dir / "extra.csv");
    csv << "0.5,1.5\n0.25,-1.0\n0.125,0.5\n";
  }
  m.trials.push_back({dir / "extra.csv", 0, 2});

  const auto mpath = dir / "dataset.manifest";
  write_manifest(m, mpath);
  const DatasetManifest r = read_manifest(mpath);
  CHECK(r.table.size() == 2);
  CHECK(r.fs_hz == 250.0);
  CHECK(r.trials.size() == 5);
  CHECK(r.trials_of_class(0).size() == 3);

  const auto epochs = load_all_trials(r);
  CHECK(epochs.size() == 5);
  // trials are grouped by class, so the class-0 csv sits at index 2
  const Epoch& csv_epoch = epochs[2];
  CHECK(csv_epoch.n_channels() == 2);
  CHECK(csv_epoch.n_samples() == 3);
  CHECK(csv_epoch.data(0, 1) == 0.25);
  CHECK(csv_epoch.data(1, 2) == 0.5);
  CHECK(csv_epoch.stimulus.class_index == 0);
}

TEST_CASE("manifest input hashing is content addressed") {
  const auto dir = tmp_dir();
  const auto p1 = dir / "hash_a.bin";
  const auto p2 = dir / "hash_b.bin";
  {
    std::ofstream(p1, std::ios::binary) << "same bytes";
    std::ofstream(p2, std::ios::binary) << "same bytes";
  }
  CHECK(hash_file_hex(p1) == hash_file_hex(p2));
  {
    std::ofstream(p2, std::ios::binary) << "different bytes";
  }
  CHECK(hash_file_hex(p1) != hash_file_hex(p2));
}
