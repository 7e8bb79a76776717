#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "larc/experiment.hpp"
#include "larc/rules.hpp"

namespace larc {

/// Flat `key = value` settings. Lines starting with '#' are comments.
class ConfigMap {
 public:
  static ConfigMap parse(std::string_view text);
  static ConfigMap load(const std::string& path);

  /// Applies "key=value"; unknown keys are a kConfiguration error.
  void set(const std::string& key, const std::string& value);
  void apply_override(std::string_view assignment);
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string text() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Every recognized key with its default value.
ConfigMap default_config();

struct RunSettings {
  ExperimentConfig experiment;
  BackendConfig backend;
  /// Rule file to use instead of distillation; empty means distill.
  std::string rules_path;
  int workers = 0;
};

/// Interprets a config; malformed values are kConfiguration errors.
RunSettings resolve_settings(const ConfigMap& config);

}  // namespace larc
