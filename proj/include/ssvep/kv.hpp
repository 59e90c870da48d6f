#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ssvep {

// Sectioned key/value text format used for dataset manifests, run manifests
// and reports:
//
//   # comment
//   [section]
//   key = value
//   list = a, b, c
//
// Sections and keys keep insertion order, so serialization is byte-stable.
class KvFile {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> items;
  };

  static KvFile parse(const std::string& text);
  static KvFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string& get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     std::string fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, std::string value);
  void set_double(const std::string& section, const std::string& key, double value);
  void set_int(const std::string& section, const std::string& key, std::int64_t value);
  void set_list(const std::string& section, const std::string& key,
                const std::vector<std::string>& values);
  void set_double_list(const std::string& section, const std::string& key,
                       const std::vector<double>& values);

  const std::vector<Section>& sections() const { return sections_; }
  bool has_section(const std::string& name) const;

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  Section& section_ref(const std::string& name);
  const Section* find_section(const std::string& name) const;
  std::vector<Section> sections_;
};

// Shortest decimal round-trip formatting for doubles.
std::string format_double(double v);

// FNV-1a 64 over a file's bytes, hex-encoded; used for run-manifest input
// hashes.
std::string hash_file_hex(const std::filesystem::path& path);

}  // namespace ssvep
