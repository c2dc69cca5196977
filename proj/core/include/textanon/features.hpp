#pragma once

#include "textanon/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace textanon {

struct FeatureConfig {
  /// Lowercased words at offsets -window..+window.
  int window = 2;
  /// Prefixes and suffixes of length 1..max_affix.
  std::size_t max_affix = 4;
  /// Word shape at offsets -1..+1 (0 only when false).
  bool context_shapes = true;
  /// POS (annotation column 1) at -1..+1 when present.
  bool use_pos = true;
  /// Chunk (annotation column 2) at 0 when present.
  bool use_chunk = false;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Phrase lists per label; matching is on lowercased token sequences.
class Gazetteer {
 public:
  void add(const std::string& label, std::span<const std::string> phrase_tokens);
  /// One phrase per line; phrases are tokenized with tokenize_raw.
  void load(const std::string& label, const std::filesystem::path& path);
  bool empty() const noexcept { return phrases_.empty(); }

  /// For each token, the labels of every phrase covering it ("B"/"I" prefixed).
  std::vector<std::vector<std::string>> mark(const Sentence& sentence) const;

 private:
  // first lowercased token -> (label, all lowercased tokens)
  std::multimap<std::string, std::pair<std::string, std::vector<std::string>>, std::less<>> phrases_;
};

/// "John" -> "Xxxx", "12-b" -> "dd-x".
std::string word_shape(std::string_view word);
/// Collapses repeats of the full shape: "John" -> "Xx".
std::string short_shape(std::string_view word);

class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig config = {}, const Gazetteer* gazetteer = nullptr);

  std::vector<std::string> extract(const Sentence& sentence, std::size_t position) const;
  /// extract() for every position, sharing gazetteer matching across positions.
  std::vector<std::vector<std::string>> extract_all(const Sentence& sentence) const;

  const FeatureConfig& config() const noexcept { return config_; }

 private:
  void append(const Sentence& sentence, std::size_t position,
              const std::vector<std::string>* marks, std::vector<std::string>& out) const;

  FeatureConfig config_;
  const Gazetteer* gazetteer_;
};

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

/// Feature string -> dense id. Once frozen, unseen features are dropped.
class FeatureIndex {
 public:
  FeatureIndex() = default;

  std::optional<std::uint32_t> find(std::string_view feature) const;
  /// Returns the existing id, or a new one while unfrozen, or nullopt once frozen.
  std::optional<std::uint32_t> add(std::string_view feature);

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> ids_;
  bool frozen_ = false;
};

/// Frozen index of features seen at least min_count times; ids ordered by
/// frequency desc, then bytes.
FeatureIndex index_features(std::span<const std::vector<std::string>> position_lists,
                            std::size_t min_count = 1);

/// Streaming variant over a corpus; never materializes all feature strings.
FeatureIndex index_corpus_features(const Corpus& corpus, const FeatureExtractor& extractor,
                                   std::size_t min_count = 1);

/// Active feature ids per position, stored flat.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const std::uint32_t> at(std::size_t position) const {
    return {ids_.data() + offsets_[position], offsets_[position + 1] - offsets_[position]};
  }
  void push_position(std::span<const std::uint32_t> ids);

 private:
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint32_t> offsets_{0};
};

FeatureSequence featurize(const Sentence& sentence, const FeatureExtractor& extractor,
                          const FeatureIndex& index);

}  // namespace textanon
