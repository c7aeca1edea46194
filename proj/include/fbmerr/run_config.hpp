#pragma once

#include "fbmerr/mc_stats.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fbmerr {

/// Config problem; `key()` names the offending key when there is one.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& message, std::string key = {})
      : std::invalid_argument(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Experiment experiment;
  std::filesystem::path output_dir = ".";
  int workers = 1;
  bool dump_samples = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat `key = value` lines, `#` starts a comment, lists are comma separated.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& file);

/// Every key in a fixed order; parse_config(print_config(c)) == c.
std::string print_config(const RunConfig& config);

/// Writes to a sibling temporary file and renames it over `target`.
void atomic_write(const std::filesystem::path& target, std::string_view content);

}  // namespace fbmerr
