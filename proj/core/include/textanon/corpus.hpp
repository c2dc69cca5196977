#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace textanon {

enum class TagKind : std::uint8_t { O, B, I };

/// One NER tag. `label` is empty exactly when `kind == O`.
struct NerTag {
  TagKind kind = TagKind::O;
  std::string label;

  static NerTag outside() { return {}; }
  static NerTag begin(std::string label) { return {TagKind::B, std::move(label)}; }
  static NerTag inside(std::string label) { return {TagKind::I, std::move(label)}; }

  bool is_outside() const noexcept { return kind == TagKind::O; }
  bool well_formed() const noexcept { return is_outside() == label.empty(); }

  /// "O", "B-PER", ...
  std::string str() const;

  friend bool operator==(const NerTag&, const NerTag&) = default;
};

/// Parses "O", "B-X" or "I-X". Returns nullopt for anything else.
std::optional<NerTag> parse_tag(std::string_view text);

std::vector<NerTag> parse_tags(std::span<const std::string> texts);

struct Token {
  std::string text;
  /// Byte offset into the owning sentence's `text`.
  std::size_t start_char = 0;
  /// Columns between the word and the NER tag (POS, chunk, ...).
  std::vector<std::string> annotations;

  std::size_t end_char() const noexcept { return start_char + text.size(); }
  std::optional<std::string_view> pos() const;
  std::optional<std::string_view> chunk() const;
};

struct Sentence {
  /// Source text; every token satisfies text.substr(start_char, size) == token.text.
  std::string text;
  std::vector<Token> tokens;
  std::optional<std::vector<NerTag>> gold_tags;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  /// Builds a sentence whose text is the words joined by single spaces.
  static Sentence from_words(std::span<const std::string> words);
};

/// Entity over tokens [start_token, end_token).
struct EntitySpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::string label;
  double score = 1.0;

  std::size_t length() const noexcept { return end_token - start_token; }
  bool overlaps(const EntitySpan& other) const noexcept {
    return start_token < other.end_token && other.start_token < end_token;
  }

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split) noexcept;

struct Corpus {
  std::vector<Sentence> sentences;
  /// Index of the first sentence of each document.
  std::vector<std::size_t> document_starts;
  /// Whether the source carried -DOCSTART- markers.
  bool docstart_markers = false;
  /// Number of columns of the source file (0 when unknown).
  std::size_t columns = 0;
  Split split = Split::Train;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  std::size_t document_count() const noexcept { return document_starts.size(); }
  std::size_t token_count() const noexcept;
};

enum class Validation { Strict, Lenient };

struct ParseOptions {
  /// Convert the tag column from IOB1 (as shipped) to BIO2.
  bool normalize_bio2 = true;
  Split split = Split::Train;
};

/// Reads CoNLL column data: word first, NER tag last, blank lines between
/// sentences, -DOCSTART- lines between documents. LF and CRLF are accepted.
Corpus parse_conll(std::istream& in, const ParseOptions& options = {});
Corpus parse_conll(std::string_view text, const ParseOptions& options = {});
Corpus load_conll(const std::filesystem::path& path, const ParseOptions& options = {});

/// Writes the corpus back in column form. When `predictions` is non-empty it
/// must hold one tag sequence per sentence; those tags become an extra last column.
void write_conll(std::ostream& out, const Corpus& corpus,
                 std::span<const std::vector<NerTag>> predictions = {});

/// IOB1 -> BIO2. Idempotent; keeps entity extents.
std::vector<NerTag> to_bio2(std::span<const NerTag> tags);

/// Maximal B-initiated runs. Lenient mode treats an orphan I-X as B-X; strict
/// mode rejects it.
std::vector<EntitySpan> spans_from_tags(std::span<const NerTag> tags,
                                        Validation validation = Validation::Strict);

std::vector<NerTag> tags_from_spans(std::span<const EntitySpan> spans, std::size_t length);

bool is_valid_bio2(std::span<const NerTag> tags) noexcept;

/// Sorted distinct entity labels in the corpus gold tags.
std::vector<std::string> entity_labels(const Corpus& corpus);

/// Key-value corpus manifest:
///   train = path, validation = path, test = path
/// or a single `data = path` plus `ratios = 0.8, 0.1, 0.1` and `seed`.
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> validation;
  std::optional<std::filesystem::path> test;
  std::optional<std::filesystem::path> data;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::uint64_t seed = 13;
};

Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

}  // namespace textanon
