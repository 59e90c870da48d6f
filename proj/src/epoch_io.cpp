#include "ssvep/epoch_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssvep/kv.hpp"
#include "ssvep/signal.hpp"

namespace ssvep {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'V', 'E', 'P', 'E', '0', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw std::runtime_error("epoch file truncated: " + path_.string());
  }

  std::size_t pos_ = 0;

 private:
  const std::string& data_;
  std::filesystem::path path_;
};

}  // namespace

void write_epoch_file(const Epoch& e, const std::filesystem::path& path) {
  validate_epoch(e);
  std::string buf;
  buf.reserve(36 + 4 * e.n_channels() * e.n_samples());
  buf.append(kMagic, 8);
  put_u32(buf, static_cast<std::uint32_t>(e.n_channels()));
  put_u32(buf, static_cast<std::uint32_t>(e.n_samples()));
  put_f32(buf, static_cast<float>(e.fs_hz));
  put_f32(buf, static_cast<float>(e.stimulus.freq_hz));
  put_f32(buf, static_cast<float>(e.stimulus.phase_rad));
  put_u32(buf, static_cast<std::uint32_t>(e.stimulus.class_index));
  put_u32(buf, e.trial_id);
  for (std::size_t c = 0; c < e.n_channels(); ++c)
    for (double v : e.data.row(c)) put_f32(buf, static_cast<float>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write epoch file: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

Epoch read_epoch_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open epoch file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0)
    throw std::runtime_error("bad epoch file magic: " + path.string());

  Reader r(data, path);
  r.pos_ = 8;
  Epoch e;
  const std::uint32_t nch = r.u32();
  const std::uint32_t ns = r.u32();
  e.fs_hz = r.f32();
  e.stimulus.freq_hz = r.f32();
  e.stimulus.phase_rad = r.f32();
  e.stimulus.class_index = static_cast<int>(r.u32());
  e.trial_id = r.u32();
  if (nch == 0 || ns < 2) throw std::runtime_error("epoch file has empty shape: " + path.string());
  r.need(static_cast<std::size_t>(nch) * ns * 4);
  e.data = Matrix(nch, ns);
  for (std::uint32_t c = 0; c < nch; ++c) {
    auto row = e.data.row(c);
    for (std::uint32_t i = 0; i < ns; ++i) {
      const float v = r.f32();
      if (!std::isfinite(v))
        throw std::runtime_error("epoch file has non-finite sample: " + path.string());
      row[i] = v;
    }
  }
  return e;
}

std::vector<TrialRef> DatasetManifest::trials_of_class(int class_index) const {
  std::vector<TrialRef> out;
  for (const auto& t : trials)
    if (t.class_index == class_index) out.push_back(t);
  return out;
}

std::size_t DatasetManifest::min_trials_per_class() const {
  std::size_t m = trials.size();
  for (const auto& e : table.entries) m = std::min(m, trials_of_class(e.class_index).size());
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const KvFile kv = KvFile::load(path);
  DatasetManifest m;
  const auto freqs = kv.get_double_list("table", "freqs");
  std::vector<double> phases(freqs.size(), 0.0);
  if (kv.has("table", "phases")) phases = kv.get_double_list("table", "phases");
  if (phases.size() != freqs.size())
    throw std::runtime_error("manifest: freqs and phases length mismatch");
  for (std::size_t j = 0; j < freqs.size(); ++j)
    m.table.entries.push_back({freqs[j], phases[j], static_cast<int>(j)});
  m.table.validate();

  if (kv.has("dataset", "fs_hz")) m.fs_hz = kv.get_double("dataset", "fs_hz");

  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    const std::string key = "class_" + std::to_string(j);
    if (!kv.has("trials", key)) continue;
    std::uint32_t trial = 0;
    for (const auto& rel : kv.get_list("trials", key)) {
      std::filesystem::path p(rel);
      if (p.is_relative()) p = dir / p;
      m.trials.push_back({p, static_cast<int>(j), trial++});
    }
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  KvFile kv;
  if (m.fs_hz > 0.0) kv.set_double("dataset", "fs_hz", m.fs_hz);
  std::vector<double> freqs, phases;
  for (const auto& e : m.table.entries) {
    freqs.push_back(e.freq_hz);
    phases.push_back(e.phase_rad);
  }
  kv.set_double_list("table", "freqs", freqs);
  kv.set_double_list("table", "phases", phases);
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  for (const auto& e : m.table.entries) {
    std::vector<std::string> files;
    for (const auto& t : m.trials_of_class(e.class_index)) {
      std::error_code ec;
      const auto rel = std::filesystem::relative(t.path, dir, ec);
      files.push_back(ec || rel.empty() ? t.path.string() : rel.string());
    }
    if (!files.empty())
      kv.set_list("trials", "class_" + std::to_string(e.class_index), files);
  }
  kv.save(path);
}

Epoch load_trial(const DatasetManifest& m, const TrialRef& ref) {
  if (ref.path.extension() == ".csv") {
    if (!(m.fs_hz > 0.0))
      throw std::runtime_error("manifest: fs_hz required for CSV trials");
    return read_epoch_csv(ref.path, m.fs_hz, m.table.by_class(ref.class_index), ref.trial_id);
  }
  Epoch e = read_epoch_file(ref.path);
  if (e.stimulus.class_index != ref.class_index)
    throw std::runtime_error("manifest: class mismatch for " + ref.path.string());
  return e;
}

std::vector<Epoch> load_all_trials(const DatasetManifest& m) {
  std::vector<Epoch> out;
  out.reserve(m.trials.size());
  for (const auto& t : m.trials) out.push_back(load_trial(m, t));
  return out;
}

Epoch read_epoch_csv(const std::filesystem::path& path, double fs_hz,
                     const StimulusSpec& stimulus, std::uint32_t trial_id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv trial: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("csv trial: non-numeric cell in " + path.string());
      }
    }
    if (!row.empty()) {
      if (!rows.empty() && rows.front().size() != row.size())
        throw std::runtime_error("csv trial: ragged rows in " + path.string());
      rows.push_back(std::move(row));
    }
  }
  if (rows.size() < 2) throw std::runtime_error("csv trial: fewer than 2 samples");

  Epoch e;
  e.fs_hz = fs_hz;
  e.stimulus = stimulus;
  e.trial_id = trial_id;
  e.data = Matrix(rows.front().size(), rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < rows[t].size(); ++c) e.data(c, t) = rows[t][c];
  validate_epoch(e);
  return e;
}

}  // namespace ssvep
