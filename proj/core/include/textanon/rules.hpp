#pragma once

#include "textanon/pipeline.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace textanon {

/// Mod-10 check: double every second digit from the right, subtract 9 above 9,
/// total must be divisible by 10. Throws NotDigits for empty or non-digit input.
bool luhn_valid(std::string_view digits);

using Validator = std::function<bool(std::string_view match)>;

/// Bundled validators: "luhn" (12-19 digits after removing spaces and hyphens),
/// "ipv4", "date", "phone". Returns nullptr for unknown names.
Validator find_validator(std::string_view name);

/// One detector unit: a regex (or a phrase list) plus scoring rules.
struct PatternRecognizer {
  std::string name;
  std::string label;
  /// ECMAScript regex over raw text. Empty when `phrases` is used instead.
  std::string pattern;
  /// Token sequences matched at token boundaries (gazetteer recognizers).
  std::vector<std::vector<std::string>> phrases;
  bool case_sensitive = true;
  double base_score = 0.5;
  std::string validator;  // empty for none
  std::vector<std::string> context_words;
  double context_boost = 0.35;
};

struct RecognizerResult {
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string label;
  double score = 0.0;
  std::string recognizer_name;

  friend bool operator==(const RecognizerResult&, const RecognizerResult&) = default;
};

inline constexpr double kDefaultScoreThreshold = 0.4;
inline constexpr std::size_t kDefaultContextWindow = 5;
inline constexpr double kDefaultContextBoost = 0.35;

/// Compiled, immutable after construction.
class RecognizerRegistry {
 public:
  RecognizerRegistry() = default;

  /// CREDIT_CARD, EMAIL, PHONE, IPV4, DATE.
  static RecognizerRegistry defaults();

  /// INI records, one `[recognizer.<name>]` section each:
  ///   label, pattern | phrases_file | phrases, score, validator, context,
  ///   boost, case_sensitive
  /// A top-level `include_defaults = false` drops the bundled set; a record
  /// whose name matches a bundled recognizer replaces it.
  static RecognizerRegistry parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static RecognizerRegistry load(const std::filesystem::path& path);

  /// Validates and compiles; throws InvalidPattern. Replaces a recognizer of the same name.
  void add(PatternRecognizer recognizer);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const PatternRecognizer& at(std::size_t i) const { return entries_.at(i)->spec; }
  const PatternRecognizer* find(std::string_view name) const;

  struct Compiled {
    PatternRecognizer spec;
    std::regex regex;
    Validator validator;
    std::vector<std::string> context_lower;
  };
  std::span<const std::shared_ptr<const Compiled>> compiled() const noexcept { return entries_; }

 private:
  std::vector<std::shared_ptr<const Compiled>> entries_;
};

/// Every match whose validator passes, context-enhanced, sorted by char_start.
std::vector<RecognizerResult> rule_detect(std::string_view text, const RecognizerRegistry& registry,
                                          std::size_t window_tokens = kDefaultContextWindow);

/// Adds the recognizer's boost (capped at 1) when one of its context words
/// occurs within `window_tokens` tokens before or after the match.
RecognizerResult context_enhance(RecognizerResult result, std::string_view text, std::size_t window_tokens,
                                 const PatternRecognizer& recognizer);

/// Keeps, among overlapping results, the higher score, then the longer span,
/// then the earlier start. Output is overlap-free and sorted by char_start.
std::vector<RecognizerResult> resolve_overlaps(std::vector<RecognizerResult> results);

/// Token-aligned adapter: char ranges expand to the covering tokens and
/// results below the threshold are dropped.
class RulesDetector final : public Detector {
 public:
  explicit RulesDetector(RecognizerRegistry registry, double score_threshold = kDefaultScoreThreshold,
                         std::size_t window_tokens = kDefaultContextWindow, std::string name = "Rules");

  std::string name() const override { return name_; }
  std::vector<EntitySpan> detect(const Sentence& sentence) const override;

  const RecognizerRegistry& registry() const noexcept { return registry_; }

 private:
  RecognizerRegistry registry_;
  double threshold_;
  std::size_t window_;
  std::string name_;
};

/// Smallest token range covering [char_start, char_end), or nullopt when no
/// token overlaps it.
std::optional<std::pair<std::size_t, std::size_t>> covering_tokens(const Sentence& sentence, std::size_t char_start,
                                                                   std::size_t char_end);

}  // namespace textanon
