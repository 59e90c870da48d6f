#include "ssvep/kv.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssvep {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

KvFile KvFile::parse(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  std::string current;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error("kv parse: unterminated section at line " +
                                 std::to_string(lineno));
      current = trim(t.substr(1, t.size() - 2));
      kv.section_ref(current);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("kv parse: expected key = value at line " +
                               std::to_string(lineno));
    kv.section_ref(current).items.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("kv load: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

KvFile::Section& KvFile::section_ref(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return s;
  sections_.push_back({name, {}});
  return sections_.back();
}

const KvFile::Section* KvFile::find_section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

bool KvFile::has_section(const std::string& name) const { return find_section(name) != nullptr; }

bool KvFile::has(const std::string& section, const std::string& key) const {
  const Section* s = find_section(section);
  if (!s) return false;
  for (const auto& [k, v] : s->items)
    if (k == key) return true;
  return false;
}

const std::string& KvFile::get(const std::string& section, const std::string& key) const {
  const Section* s = find_section(section);
  if (s)
    for (const auto& [k, v] : s->items)
      if (k == key) return v;
  throw std::runtime_error("kv: missing key [" + section + "] " + key);
}

std::string KvFile::get_or(const std::string& section, const std::string& key,
                           std::string fallback) const {
  return has(section, key) ? get(section, key) : std::move(fallback);
}

double KvFile::get_double(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("kv: [" + section + "] " + key + " is not a number: " + v);
  }
}

std::int64_t KvFile::get_int(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw std::runtime_error("kv: [" + section + "] " + key + " is not an integer: " + v);
  return out;
}

std::vector<std::string> KvFile::get_list(const std::string& section,
                                          const std::string& key) const {
  const std::string& v = get(section, key);
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

std::vector<double> KvFile::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_list(section, key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw std::runtime_error("kv: [" + section + "] " + key + " has non-numeric entry: " + s);
    }
  }
  return out;
}

void KvFile::set(const std::string& section, const std::string& key, std::string value) {
  Section& s = section_ref(section);
  for (auto& [k, v] : s.items)
    if (k == key) {
      v = std::move(value);
      return;
    }
  s.items.emplace_back(key, std::move(value));
}

void KvFile::set_double(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

void KvFile::set_int(const std::string& section, const std::string& key, std::int64_t value) {
  set(section, key, std::to_string(value));
}

void KvFile::set_list(const std::string& section, const std::string& key,
                      const std::vector<std::string>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ", ";
    joined += values[i];
  }
  set(section, key, std::move(joined));
}

void KvFile::set_double_list(const std::string& section, const std::string& key,
                             const std::vector<double>& values) {
  std::vector<std::string> s;
  s.reserve(values.size());
  for (double v : values) s.push_back(format_double(v));
  set_list(section, key, s);
}

std::string KvFile::serialize() const {
  std::string out;
  for (const auto& s : sections_) {
    if (!s.name.empty()) out += "[" + s.name + "]\n";
    for (const auto& [k, v] : s.items) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

void KvFile::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("kv save: cannot write " + path.string());
  out << serialize();
}

std::string format_double(double v) {
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hash_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace ssvep
