#pragma once

#include "textanon/corpus.hpp"
#include "textanon/pipeline.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace textanon {

enum class EvalMode { Entity, Token };
std::string_view to_string(EvalMode mode);

struct Counts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  Counts& operator+=(const Counts& o) noexcept;
  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Every ratio with a zero denominator is 0.
struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Scores from(const Counts& c) noexcept;
  friend bool operator==(const Scores&, const Scores&) = default;
};

struct EvalReport {
  EvalMode mode = EvalMode::Entity;
  /// Only labels with at least one nonzero count.
  std::map<std::string, Counts> per_label;
  /// Sum of per_label.
  Counts micro_counts;
  Scores micro;
  /// Unweighted mean of the per-label scores; 0 when per_label is empty.
  Scores macro;

  Scores label(const std::string& name) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

using SpanSequences = std::vector<std::vector<EntitySpan>>;
using TagSequences = std::vector<std::vector<NerTag>>;

/// Exact (start, end, label) match; each gold span is matched at most once.
/// Throws AlignmentError when the sentence counts differ.
EvalReport entity_prf(std::span<const std::vector<EntitySpan>> gold,
                      std::span<const std::vector<EntitySpan>> predicted);

/// Per-token comparison of full tags at positions where either side is not O.
/// A matching tag counts a TP for its label; otherwise the gold label gets a FN
/// and the predicted label a FP. Throws AlignmentError or LengthMismatch.
EvalReport token_prf(std::span<const std::vector<NerTag>> gold, std::span<const std::vector<NerTag>> predicted);

/// Predictions produced outside the library, in CoNLL columns with the
/// predicted tag last.
struct ImportedPredictions {
  std::string name;
  Corpus corpus;
};

/// Loads a prediction file; the model name defaults to the file stem.
ImportedPredictions load_predictions(const std::filesystem::path& path, std::string name = {});

struct BenchmarkRow {
  std::string name;
  EvalReport entity;
  EvalReport token;
  friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

struct BenchmarkTable {
  /// Sorted by micro entity F1 descending, then name.
  std::vector<BenchmarkRow> rows;

  const BenchmarkRow* find(std::string_view name) const;
  friend bool operator==(const BenchmarkTable&, const BenchmarkTable&) = default;
};

/// Throws ImportMisalignment when an import disagrees with `test` in sentence
/// count, token count or token text, and Error when a detector breaks the span
/// contract.
BenchmarkTable run_benchmark(const Corpus& test, std::span<const Detector* const> detectors,
                             std::span<const ImportedPredictions> imports = {});

enum class ReportFormat { Markdown, Csv };

/// Values are rounded to two decimals only here.
std::string render(const BenchmarkTable& table, ReportFormat format);

/// "| name | P | R | F1 |" with two decimals.
std::string markdown_row(std::string_view name, const Scores& s);

struct CsvRecord {
  std::string model;
  std::string mode;   // "entity" | "token"
  std::string label;  // "micro", "macro" or an entity label
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  friend bool operator==(const CsvRecord&, const CsvRecord&) = default;
};

/// Inverse of render(table, Csv). Throws Error on malformed input.
std::vector<CsvRecord> parse_report_csv(std::string_view text);

/// One line comparing a row's micro entity and token F1 to a reference value.
std::string reference_gap(const BenchmarkRow& row, double reference_f1);

}  // namespace textanon
