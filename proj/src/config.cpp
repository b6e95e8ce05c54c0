#include "fact/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fact/errors.hpp"

namespace fact {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text,
                                    const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.resize(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw SchemaError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw SchemaError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (!cfg.values_.emplace(key, value).second)
      throw SchemaError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
  }
  return cfg;
}

bool ConfigFile::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& key,
                                   const std::string& fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError(origin_ + ": key '" + key + "' is not a number: '" +
                      it->second + "'");
  }
}

int ConfigFile::get_int(const std::string& key, int fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t used = 0;
    const long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw SchemaError(origin_ + ": key '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

uint64_t ConfigFile::get_uint64(const std::string& key, uint64_t fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError(origin_ + ": key '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw SchemaError(origin_ + ": key '" + key + "' is not a boolean: '" +
                    it->second + "'");
}

std::map<std::string, std::string> ConfigFile::take_section(
    const std::string& prefix) {
  std::map<std::string, std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(p, 0) == 0) {
      consumed_.insert(k);
      out.emplace(k.substr(p.size()), v);
    }
  }
  return out;
}

void ConfigFile::finish() const {
  for (const auto& [k, v] : values_)
    if (!consumed_.count(k))
      throw SchemaError(origin_ + ": unknown key '" + k + "'");
}

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot hash '" + path + "': open failed");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!is) break;
  }
  return h;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest '" + path + "'");
  os << "format_version = 1\n";
  os << "command = " << manifest.command << "\n";
  os << "tool_version = " << manifest.tool_version << "\n";
  os << "seed = " << manifest.seed << "\n";
  os << "status = " << manifest.status << "\n";
  if (!manifest.message.empty()) os << "message = " << manifest.message << "\n";
  os << "start_unix = " << manifest.start_unix << "\n";
  os << "end_unix = " << manifest.end_unix << "\n";
  os << "[config]\n";
  for (const auto& [k, v] : manifest.resolved_config)
    os << k << " = " << v << "\n";
  os << "[inputs]\n";
  for (const auto& [k, v] : manifest.input_hashes) os << k << " = " << v << "\n";
  if (!os) throw IoError("write failed for manifest '" + path + "'");
}

}  // namespace fact
