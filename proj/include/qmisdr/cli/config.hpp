#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmisdr::cli {

inline constexpr const char* kToolName = "qmi-sdr";
inline constexpr const char* kToolVersion = "1.0.0";

// Raised for anything wrong with the config file or command-line values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Effective key/value pairs of one command section, defaults filled in.
class Section {
 public:
  Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir);

  const std::string& name() const noexcept { return name_; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  long long get_int(const std::string& key, long long min_value) const;
  std::uint64_t get_seed(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long long> get_ints(const std::string& key, long long min_value) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  // Empty value gives nullopt; relative paths resolve against the config file's directory.
  std::optional<std::filesystem::path> get_path(const std::string& key) const;

  // Sorted "key=value" lines; the input to config_hash.
  std::string canonical() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::string name_;
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

// Known command sections: illustrate, sdr, bench.
const std::map<std::string, std::string>& section_defaults(const std::string& command);

// Parses `key = value` lines grouped under [command] headers. Every section
// and key must be known; the requested command's section may be absent.
Section load_section(const std::filesystem::path& path, const std::string& command);
Section parse_section(const std::string& text, const std::string& command, const std::filesystem::path& base_dir);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace qmisdr::cli
