#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fact {

// Flat key = value configuration text with optional [section] headers;
// section names prefix keys as "section.key". '#' and ';' start comments.
// Every key must be consumed by the caller: finish() rejects unknown keys.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text,
                                 const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  uint64_t get_uint64(const std::string& key, uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);

  // Keys under `prefix.` (consumed), mapped by the remainder of the key.
  std::map<std::string, std::string> take_section(const std::string& prefix);

  // Throws a schema error naming any key never consumed.
  void finish() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Run provenance written into every run directory, on success and failure.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> resolved_config;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a-64 hex
  uint64_t seed = 0;
  std::string tool_version;
  int64_t start_unix = 0, end_unix = 0;
  std::string status;  // "ok" or the error category name
  std::string message;
};

uint64_t fnv1a_file(const std::string& path);
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace fact
