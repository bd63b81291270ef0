#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"

namespace polylab::cli {

enum class ValueType { Int, UInt, Real, Text, Dist, IntList, RealList, Choice };

struct KeySpec {
  std::string key;
  ValueType type = ValueType::Text;
  std::string fallback;              // default, in raw form
  std::vector<std::string> choices;  // Choice only
  std::string doc;
};

using Schema = std::vector<KeySpec>;

/// Raw key=value pairs in the order they were given. `source` is the file or
/// "command line"; `origin` adds the line or argument position for messages.
struct RawEntry {
  std::string key, value, source, origin;
};
using RawConfig = std::vector<RawEntry>;

/// Every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Lines "key = value"; '#' starts a comment.
RawConfig parse_config_text(const std::string& text, const std::string& origin);
RawConfig read_config_file(const std::string& path);

/// A validated configuration: every schema key present, values in canonical form.
class Config {
 public:
  static Config resolve(const std::string& command, const Schema& schema, const RawConfig& raw);
  /// Rebuilds from an embedded canonical map (no schema checks).
  static Config from_canonical(std::string command, std::map<std::string, std::string> values);

  const std::string& command() const { return command_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  long get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_real(const std::string& key) const;
  const std::string& get_text(const std::string& key) const;
  PotentialDistribution get_dist(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;
  std::vector<double> get_reals(const std::string& key) const;
  /// A real list read as a vector of at most three components.
  Vec get_vec(const std::string& key) const;
  /// An integer list read as a lattice point.
  Point get_point(const std::string& key) const;

  /// "command\nkey=value\n..." with sorted keys.
  std::string canonical_text() const;
  /// FNV-1a of the canonical text, 16 hex digits.
  std::string hash() const;

 private:
  const std::string& raw(const std::string& key) const;
  std::string command_;
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace polylab::cli
