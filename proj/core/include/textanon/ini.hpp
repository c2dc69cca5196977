#pragma once

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace textanon::ini {

struct Section {
  std::string name;  // empty for keys that precede any [section]
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> get(std::string_view key) const;
  /// Throws ConfigError naming the first key not in `allowed`. A trailing '*'
  /// in an allowed entry matches any key with that prefix.
  void require_known(std::initializer_list<std::string_view> allowed) const;
};

struct Document {
  std::vector<Section> sections;

  const Section* find(std::string_view name) const;
};

/// Parses INI-style text (sections, `key = value`, ';' or '#' comment lines).
/// Backed by boost::property_tree; section and key order is preserved.
Document parse(std::string_view text);
Document load(const std::filesystem::path& path);

std::vector<std::string> split_list(std::string_view value, char separator = ',');
double to_double(std::string_view key, std::string_view value);
long long to_integer(std::string_view key, std::string_view value);
bool to_bool(std::string_view key, std::string_view value);

}  // namespace textanon::ini
