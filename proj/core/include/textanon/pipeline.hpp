#pragma once

#include "textanon/corpus.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace textanon {

/// Whitespace split, then leading/trailing punctuation is detached into
/// single-character tokens. Hyphens, apostrophes, periods, '@', '_', '/' and
/// ':' between alphanumeric characters stay inside the token.
Sentence tokenize_raw(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::uint32_t pad_id = 0;
  static constexpr std::uint32_t unk_id = 1;
  static constexpr std::uint32_t reserved = 2;

  Vocabulary() = default;

  /// Tokens with frequency >= min_count, ordered by frequency desc then bytes.
  static Vocabulary build(const Corpus& corpus, std::size_t min_count = 2);

  std::uint32_t id(std::string_view token) const;
  const std::string& token(std::uint32_t id) const;
  /// Includes the reserved ids.
  std::size_t size() const noexcept { return tokens_.size() + reserved; }
  bool contains(std::string_view token) const;

  /// One token per line; the line index equals id - reserved.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct EncodedSentence {
  std::vector<std::uint32_t> ids;
  std::size_t attention_length = 0;
};

inline constexpr std::size_t kDefaultMaxLen = 128;

EncodedSentence encode(const Sentence& sentence, const Vocabulary& vocab,
                       std::size_t max_len = kDefaultMaxLen);

struct CorpusSplits {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Sentence-level seeded partition. Sizes are round(n * train),
/// round(n * validation), and the remainder.
CorpusSplits split_corpus(const Corpus& corpus, const std::array<double, 3>& ratios,
                          std::uint64_t seed);

/// Reads the files a manifest names, splitting `data` when no pre-split files exist.
CorpusSplits load_splits(const Manifest& manifest);

/// Seeded sentence subsample keeping round(fraction * n) sentences in corpus order.
Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Fisher-Yates driven by mt19937_64, so the permutation is identical on every
/// standard library.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

/// The detection stage every backend implements. Implementations are
/// immutable after construction and safe to call from several threads.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;
  /// Non-overlapping, in-bounds spans with scores in [0, 1], sorted by start.
  virtual std::vector<EntitySpan> detect(const Sentence& sentence) const = 0;
};

/// Empty when `spans` satisfy the detector span contract for a sentence of
/// `length` tokens, otherwise a description of the first violation.
std::string check_spans(std::span<const EntitySpan> spans, std::size_t length);

/// Returns the gold spans. Used as a reference backend and in tests.
class GoldDetector final : public Detector {
 public:
  explicit GoldDetector(std::string name = "Gold") : name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<EntitySpan> detect(const Sentence& sentence) const override;

 private:
  std::string name_;
};

}  // namespace textanon
