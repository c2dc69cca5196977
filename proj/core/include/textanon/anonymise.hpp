#pragma once

#include "textanon/corpus.hpp"
#include "textanon/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace textanon {

/// Replacement word lists keyed by entity label.
class Dictionaries {
 public:
  /// Small built-in lists for PER, ORG, LOC, MISC and the rule-engine labels.
  static Dictionaries bundled();

  void set(const std::string& label, std::vector<std::string> entries);
  /// One entry per line; blank lines are skipped.
  void load(const std::string& label, const std::filesystem::path& path);
  const std::vector<std::string>* find(std::string_view label) const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

/// Every entity becomes the same placeholder.
struct Removal {
  std::string placeholder = "<REF>";
};

/// Every entity becomes "<NAME>" where NAME comes from the label map.
struct Categorisation {
  std::map<std::string, std::string, std::less<>> placeholders = default_placeholders();

  /// PER->PERSON, LOC->LOCATION, ORG->ORG, MISC->MISC, and identity for the
  /// rule-engine labels.
  static std::map<std::string, std::string, std::less<>> default_placeholders();
};

/// Every entity becomes a same-category entry from the label's dictionary.
struct Pseudonymisation {
  std::uint64_t seed = 13;
  Dictionaries dictionaries = Dictionaries::bundled();
};

using Strategy = std::variant<Removal, Categorisation, Pseudonymisation>;

struct Replacement {
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string replacement;
  std::string label;
  std::string original;
};

struct AnonymisationPlan {
  std::string text;
  /// Sorted, non-overlapping, within text bounds.
  std::vector<Replacement> replacements;
};

struct AuditEntry {
  std::string original;
  std::string replacement;
  std::string label;
  std::size_t original_start = 0;
  std::size_t original_end = 0;
  std::size_t new_start = 0;
  std::size_t new_end = 0;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct AnonymisedDocument {
  std::string text;
  std::vector<AuditEntry> audit;
};

/// FNV-1a of (seed, surface) indexes the label's dictionary, skipping ahead
/// past entries equal to `surface`.
/// Throws NoDictionaryForLabel.
std::string pseudonym_for(std::string_view label, std::string_view surface, std::uint64_t seed,
                          const Dictionaries& dictionaries);

/// Token spans are mapped to character ranges through the sentence offsets.
/// Throws OverlappingSpans.
AnonymisationPlan plan(const Sentence& sentence, std::span<const EntitySpan> spans, const Strategy& strategy);

/// Runs `detector` line by line over a multi-line text and plans the whole text.
AnonymisationPlan plan_text(std::string_view text, const Detector& detector, const Strategy& strategy);

/// Sentence texts joined by '\n'; each sentence is planned against `detector`.
AnonymisationPlan plan_corpus(const Corpus& corpus, const Detector& detector, const Strategy& strategy);

AnonymisedDocument apply(const AnonymisationPlan& plan);

/// Undoes the audit replacements, right to left. Throws Error if the text no
/// longer holds a recorded replacement.
std::string restore(std::string_view anonymised_text, std::span<const AuditEntry> audit);

/// JSON lines, one audit entry per line.
void write_audit(std::ostream& out, std::span<const AuditEntry> audit);
std::vector<AuditEntry> read_audit(std::istream& in);

}  // namespace textanon
