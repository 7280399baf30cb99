#include "twode/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace twode::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    Entry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    for (const auto& prev : cfg.entries_)
      if (prev.section == e.section && prev.key == e.key)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                          e.key + "' in section [" + e.section + "]");
    cfg.entries_.push_back(std::move(e));
  }
  return cfg;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) {
      e.consumed = true;
      return &e;
    }
  return nullptr;
}

const ConfigFile::Entry& ConfigFile::require(const std::string& section,
                                             const std::string& key) const {
  const Entry* e = find(section, key);
  if (e == nullptr)
    throw ConfigError("missing required key '" + key + "' in section [" + section + "]");
  return *e;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
  return require(section, key).value;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

namespace {

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError("line " + std::to_string(line) + ": field '" + section + "." + key +
                      "' is not a number: '" + value + "'");
  }
}

int parse_int(const std::string& section, const std::string& key,
              const std::string& value, int line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (...) {
    throw ConfigError("line " + std::to_string(line) + ": field '" + section + "." + key +
                      "' is not an integer: '" + value + "'");
  }
}

}  // namespace

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  return parse_double(section, key, e.value, e.line);
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_double(section, key, e->value, e->line) : fallback;
}

int ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  return parse_int(section, key, e.value, e.line);
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_int(section, key, e->value, e->line) : fallback;
}

std::uint64_t ConfigFile::get_uint64(const std::string& section, const std::string& key,
                                     std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(v);
  } catch (...) {
    throw ConfigError("line " + std::to_string(e->line) + ": field '" + section + "." +
                      key + "' is not an unsigned integer: '" + e->value + "'");
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  throw ConfigError("line " + std::to_string(e->line) + ": field '" + section + "." +
                    key + "' is not a boolean: '" + e->value + "'");
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key) const {
  return split_list(require(section, key).value);
}

std::vector<std::string> ConfigFile::get_list(
    const std::string& section, const std::string& key,
    const std::vector<std::string>& fallback) const {
  const Entry* e = find(section, key);
  return e ? split_list(e->value) : fallback;
}

std::vector<double> ConfigFile::get_double_list(const std::string& section,
                                                const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<double> out;
  for (const auto& item : split_list(e.value))
    out.push_back(parse_double(section, key, item, e.line));
  return out;
}

std::vector<double> ConfigFile::get_double_list(const std::string& section,
                                                const std::string& key,
                                                const std::vector<double>& fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value))
    out.push_back(parse_double(section, key, item, e->line));
  return out;
}

std::vector<int> ConfigFile::get_int_list(const std::string& section,
                                          const std::string& key,
                                          const std::vector<int>& fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(e->value))
    out.push_back(parse_int(section, key, item, e->line));
  return out;
}

void ConfigFile::ensure_all_consumed() const {
  for (const auto& e : entries_)
    if (!e.consumed)
      throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" +
                        e.key + "' in section [" + e.section + "]");
}

std::string ConfigFile::canonical_text() const {
  std::vector<std::string> lines;
  lines.reserve(entries_.size());
  for (const auto& e : entries_) lines.push_back(e.section + "." + e.key + "=" + e.value);
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace twode::config
