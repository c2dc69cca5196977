#include "textanon/ini.hpp"

#include "textanon/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace textanon::ini {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::string> Section::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void Section::require_known(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : entries) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](std::string_view a) {
      if (!a.empty() && a.back() == '*') {
        a.remove_suffix(1);
        return std::string_view(key).starts_with(a);
      }
      return a == key;
    });
    if (!ok) {
      throw ConfigError("unknown key '" + key + "'" +
                        (name.empty() ? std::string() : " in section [" + name + "]"));
    }
  }
}

const Section* Document::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

Document parse(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  Document doc;
  Section top;
  for (const auto& [key, child] : tree) {
    if (child.empty()) {
      top.entries.emplace_back(key, child.data());
      continue;
    }
    Section section;
    section.name = key;
    for (const auto& [k, v] : child) section.entries.emplace_back(k, v.data());
    doc.sections.push_back(std::move(section));
  }
  if (!top.entries.empty()) doc.sections.insert(doc.sections.begin(), std::move(top));
  return doc;
}

Document load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::string> split_list(std::string_view value, char separator) {
  std::vector<std::string> out;
  while (true) {
    const auto pos = value.find(separator);
    const auto item = trim(value.substr(0, pos));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    value.remove_prefix(pos + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  value = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" +
                      std::string(value) + "'");
  }
  return out;
}

long long to_integer(std::string_view key, std::string_view value) {
  value = trim(value);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  value = trim(value);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': expected a boolean, got '" +
                    std::string(value) + "'");
}

}  // namespace textanon::ini
