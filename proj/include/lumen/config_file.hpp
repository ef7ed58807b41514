#pragma once

#include "lumen/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lumen {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Raised for keys that are not part of a schema; `key()` names the offender.
class UnknownKeyError : public ConfigError {
 public:
  explicit UnknownKeyError(const std::string& key) : ConfigError("unknown config key '" + key + "'"), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// `key = value` settings with a fixed schema. Files allow blank lines and
/// `#` comments; later assignments win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  explicit KeyValueConfig(std::vector<ConfigKey> schema);

  void load_file(const std::filesystem::path& path);
  void parse(const std::string& text, const std::string& origin = "<text>");
  /// One `key=value` assignment.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::vector<ConfigKey>& schema() const { return schema_; }
  /// `key = value` lines in schema order.
  std::string canonical(const std::set<std::string>& exclude = {}) const;
  /// FNV-1a over canonical(exclude), as 16 hex digits.
  std::string hash(const std::set<std::string>& exclude = {}) const;
  /// Every key with its default and help line.
  std::string help_text() const;

 private:
  std::vector<ConfigKey> schema_;
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace lumen
