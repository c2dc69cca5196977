#pragma once

#include <textanon/crf.hpp>
#include <textanon/perceptron.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace textanon::cli {

/// One run configuration. Relative paths in a config file resolve against the
/// file's directory; command-line flags override file values.
struct Config {
  std::optional<std::filesystem::path> manifest;
  std::uint64_t seed = 13;
  bool seed_set = false;
  std::filesystem::path out_dir = ".";

  std::size_t feature_min_count = 1;
  FeatureConfig features;
  std::map<std::string, std::filesystem::path> gazetteers;

  CrfConfig crf;
  PerceptronConfig perceptron;

  /// Detector selection for benchmark and anonymise: crf, perceptron, rules, gold.
  std::vector<std::string> detectors;
  std::optional<std::filesystem::path> crf_model;
  std::optional<std::filesystem::path> perceptron_model;
  std::optional<std::filesystem::path> rules_registry;
  double rules_threshold = 0.4;
  std::size_t rules_window = 5;
  std::vector<std::filesystem::path> imports;

  std::string strategy = "removal";
  std::string placeholder = "<REF>";
  std::map<std::string, std::string> categories;
  std::map<std::string, std::filesystem::path> dictionaries;

  double reference_f1 = 0.93;
  std::string format = "markdown";
};

/// Throws ConfigError on unknown sections or keys, bad values, or referenced
/// input files that do not exist.
Config parse_config(std::string_view text, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);

/// Applies the seed to every consumer of randomness.
void set_seed(Config& config, std::uint64_t seed);

/// Existence check for every input path the config names.
void validate_paths(const Config& config);

}  // namespace textanon::cli
