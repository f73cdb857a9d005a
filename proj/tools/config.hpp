#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "ktb/convex_body.hpp"
#include "ktb/linalg.hpp"

namespace ktb::cli {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

struct ConfigSection {
  /// "body" or "experiment".
  std::string type;
  /// Body label such as K or T; empty for [experiment].
  std::string label;
  int line = 0;
  std::map<std::string, ConfigEntry> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  const ConfigEntry& at(const std::string& key) const;

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  Vec vector(const std::string& key) const;
  /// Rows separated by ';'.
  Mat matrix(const std::string& key) const;
};

/// INI-style experiment description:
///
///   [body K]
///   kind = superellipsoid
///   semi_axes = 1 1
///   exponent = 4
///
///   [experiment]
///   seed = 7
///
/// '#' starts a comment. Errors carry the offending line number.
class ExperimentConfig {
 public:
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse_string(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  bool has_body(const std::string& label) const;
  const ConfigSection& body_section(const std::string& label) const;
  BodyPtr body(const std::string& label) const;
  const ConfigSection& experiment() const { return experiment_; }

 private:
  std::map<std::string, ConfigSection> bodies_;
  ConfigSection experiment_;
};

BodyPtr make_body(const ConfigSection& section);

}  // namespace ktb::cli
