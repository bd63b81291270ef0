#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace polylab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

double parse_finite(const std::string& s) {
  const double v = parse_double(s);
  if (!std::isfinite(v)) throw std::invalid_argument("not a finite number: '" + s + "'");
  return v;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

// Canonical form of a raw value; throws std::invalid_argument with the reason.
std::string canonicalize(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case ValueType::Int: return std::to_string(parse_integer<long>(value));
    case ValueType::UInt: return std::to_string(parse_integer<std::uint64_t>(value));
    case ValueType::Real: return format_double(parse_finite(value));
    case ValueType::Text: return value;
    case ValueType::Dist: return PotentialDistribution::parse(value).spec();
    case ValueType::IntList: {
      std::vector<std::string> parts;
      for (const auto& p : split_list(value)) parts.push_back(std::to_string(parse_integer<int>(p)));
      return join(parts);
    }
    case ValueType::RealList: {
      std::vector<std::string> parts;
      for (const auto& p : split_list(value)) parts.push_back(format_double(parse_finite(p)));
      return join(parts);
    }
    case ValueType::Choice:
      for (const auto& c : spec.choices)
        if (c == value) return value;
      throw std::invalid_argument("expected one of {" + join(spec.choices) + "}, got '" + value + "'");
  }
  return value;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

RawConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig out;
  std::vector<std::string> problems;
  std::istringstream is(text);
  std::string line;
  for (int no = 1; std::getline(is, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(no);
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      problems.push_back(where + ": expected key=value, got '" + line + "'");
      continue;
    }
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin, where});
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

RawConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

Config Config::resolve(const std::string& command, const Schema& schema, const RawConfig& raw) {
  std::vector<std::string> problems;
  std::map<std::string, const KeySpec*> by_key;
  for (const auto& s : schema) by_key[s.key] = &s;

  Config c;
  c.command_ = command;
  // Later entries override earlier ones (file first, then command-line overrides).
  std::map<std::string, const RawEntry*> given;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : raw) {
    if (!by_key.count(e.key)) {
      problems.push_back(e.origin + ": unknown key '" + e.key + "' for '" + command + "'");
      continue;
    }
    if (!seen.insert({e.source, e.key}).second) problems.push_back(e.origin + ": duplicate key '" + e.key + "'");
    given[e.key] = &e;
  }
  for (const auto& s : schema) {
    const auto it = given.find(s.key);
    const std::string value = it != given.end() ? it->second->value : s.fallback;
    const std::string where = it != given.end() ? it->second->origin : "default";
    try {
      c.values_[s.key] = canonicalize(s, value);
    } catch (const std::exception& ex) {
      problems.push_back(where + ": key '" + s.key + "': " + ex.what());
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

Config Config::from_canonical(std::string command, std::map<std::string, std::string> values) {
  Config c;
  c.command_ = std::move(command);
  c.values_ = std::move(values);
  return c;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("configuration has no key '" + key + "'");
  return it->second;
}

long Config::get_int(const std::string& key) const { return parse_integer<long>(raw(key)); }
std::uint64_t Config::get_uint(const std::string& key) const { return parse_integer<std::uint64_t>(raw(key)); }
double Config::get_real(const std::string& key) const { return parse_double(raw(key)); }
const std::string& Config::get_text(const std::string& key) const { return raw(key); }
PotentialDistribution Config::get_dist(const std::string& key) const { return PotentialDistribution::parse(raw(key)); }

std::vector<int> Config::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& p : split_list(raw(key))) out.push_back(parse_integer<int>(p));
  return out;
}

std::vector<double> Config::get_reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& p : split_list(raw(key))) out.push_back(parse_double(p));
  return out;
}

Vec Config::get_vec(const std::string& key) const {
  const auto v = get_reals(key);
  if (v.size() > static_cast<std::size_t>(kMaxDim)) throw std::invalid_argument("key '" + key + "': too many components");
  Vec out{};
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

Point Config::get_point(const std::string& key) const {
  const auto v = get_ints(key);
  if (v.size() > static_cast<std::size_t>(kMaxDim)) throw std::invalid_argument("key '" + key + "': too many components");
  Point out{};
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

std::string Config::canonical_text() const {
  std::string out = command_ + "\n";
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash() const { return hex64(fnv1a(canonical_text())); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace polylab::cli
