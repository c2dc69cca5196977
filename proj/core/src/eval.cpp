#include "textanon/eval.hpp"

#include "textanon/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace textanon {

namespace {

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void finish(EvalReport& r) {
  r.micro_counts = {};
  for (const auto& [label, c] : r.per_label) r.micro_counts += c;
  r.micro = Scores::from(r.micro_counts);
  r.macro = {};
  if (r.per_label.empty()) return;
  for (const auto& [label, c] : r.per_label) {
    const auto s = Scores::from(c);
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
  }
  const auto n = static_cast<double>(r.per_label.size());
  r.macro.precision /= n;
  r.macro.recall /= n;
  r.macro.f1 /= n;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> csv_split(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error("report csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error("report csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

constexpr std::string_view kCsvHeader = "model,mode,label,precision,recall,f1,tp,fp,fn";

void csv_line(std::ostringstream& out, const std::string& model, EvalMode mode, const std::string& label,
              const Scores& s, const Counts& c) {
  out << csv_field(model) << ',' << to_string(mode) << ',' << csv_field(label) << ',' << two_decimals(s.precision)
      << ',' << two_decimals(s.recall) << ',' << two_decimals(s.f1) << ',' << c.true_positive << ','
      << c.false_positive << ',' << c.false_negative << '\n';
}

void csv_report(std::ostringstream& out, const std::string& model, const EvalReport& r) {
  csv_line(out, model, r.mode, "micro", r.micro, r.micro_counts);
  csv_line(out, model, r.mode, "macro", r.macro, r.micro_counts);
  for (const auto& [label, c] : r.per_label) csv_line(out, model, r.mode, label, Scores::from(c), c);
}

void markdown_summary(std::ostringstream& out, const BenchmarkTable& table, EvalMode mode, std::string_view title) {
  out << "### " << title << "\n\n";
  out << "| Model | Precision | Recall | F1 |\n";
  out << "|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    const auto& r = mode == EvalMode::Entity ? row.entity : row.token;
    out << markdown_row(row.name, r.micro) << '\n';
  }
  out << '\n';
}

void markdown_breakdown(std::ostringstream& out, const BenchmarkTable& table, EvalMode mode, std::string_view title) {
  out << "### " << title << "\n\n";
  out << "| Model | Label | Precision | Recall | F1 | TP | FP | FN |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    const auto& r = mode == EvalMode::Entity ? row.entity : row.token;
    for (const auto& [label, c] : r.per_label) {
      const auto s = Scores::from(c);
      out << "| " << row.name << " | " << label << " | " << two_decimals(s.precision) << " | "
          << two_decimals(s.recall) << " | " << two_decimals(s.f1) << " | " << c.true_positive << " | "
          << c.false_positive << " | " << c.false_negative << " |\n";
    }
    out << "| " << row.name << " | (macro) | " << two_decimals(r.macro.precision) << " | "
        << two_decimals(r.macro.recall) << " | " << two_decimals(r.macro.f1) << " |  |  |  |\n";
  }
  out << '\n';
}

const std::vector<NerTag>& gold_tags_of(const Sentence& s, std::size_t index) {
  if (!s.gold_tags) throw Error("test sentence " + std::to_string(index) + " has no gold tags");
  return *s.gold_tags;
}

BenchmarkRow score_row(std::string name, const SpanSequences& gold_spans, const TagSequences& gold_tags,
                       const SpanSequences& pred_spans, const TagSequences& pred_tags) {
  BenchmarkRow row;
  row.name = std::move(name);
  row.entity = entity_prf(gold_spans, pred_spans);
  row.token = token_prf(gold_tags, pred_tags);
  return row;
}

}  // namespace

std::string_view to_string(EvalMode mode) { return mode == EvalMode::Entity ? "entity" : "token"; }

Counts& Counts::operator+=(const Counts& o) noexcept {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

Scores Scores::from(const Counts& c) noexcept {
  Scores s;
  s.precision = ratio(c.true_positive, c.true_positive + c.false_positive);
  s.recall = ratio(c.true_positive, c.true_positive + c.false_negative);
  const double pr = s.precision + s.recall;
  s.f1 = pr == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / pr;
  return s;
}

Scores EvalReport::label(const std::string& name) const {
  const auto it = per_label.find(name);
  return it == per_label.end() ? Scores{} : Scores::from(it->second);
}

EvalReport entity_prf(std::span<const std::vector<EntitySpan>> gold,
                      std::span<const std::vector<EntitySpan>> predicted) {
  if (gold.size() != predicted.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                         std::to_string(predicted.size()));
  }
  EvalReport r;
  r.mode = EvalMode::Entity;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::vector<bool> used(gold[i].size(), false);
    for (const auto& p : predicted[i]) {
      bool hit = false;
      for (std::size_t g = 0; g < gold[i].size(); ++g) {
        const auto& s = gold[i][g];
        if (!used[g] && s.start_token == p.start_token && s.end_token == p.end_token && s.label == p.label) {
          used[g] = true;
          hit = true;
          break;
        }
      }
      auto& c = r.per_label[p.label];
      ++(hit ? c.true_positive : c.false_positive);
    }
    for (std::size_t g = 0; g < gold[i].size(); ++g) {
      if (!used[g]) ++r.per_label[gold[i][g].label].false_negative;
    }
  }
  finish(r);
  return r;
}

EvalReport token_prf(std::span<const std::vector<NerTag>> gold, std::span<const std::vector<NerTag>> predicted) {
  if (gold.size() != predicted.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                         std::to_string(predicted.size()));
  }
  EvalReport r;
  r.mode = EvalMode::Token;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) {
      throw LengthMismatch("sentence " + std::to_string(i) + ": " + std::to_string(gold[i].size()) +
                           " gold tags vs " + std::to_string(predicted[i].size()) + " predicted");
    }
    for (std::size_t t = 0; t < gold[i].size(); ++t) {
      const auto& g = gold[i][t];
      const auto& p = predicted[i][t];
      if (!g.is_outside() && g == p) {
        ++r.per_label[g.label].true_positive;
        continue;
      }
      if (!g.is_outside()) ++r.per_label[g.label].false_negative;
      if (!p.is_outside()) ++r.per_label[p.label].false_positive;
    }
  }
  finish(r);
  return r;
}

ImportedPredictions load_predictions(const std::filesystem::path& path, std::string name) {
  ImportedPredictions out;
  out.name = name.empty() ? path.stem().string() : std::move(name);
  out.corpus = load_conll(path);
  return out;
}

const BenchmarkRow* BenchmarkTable::find(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

BenchmarkTable run_benchmark(const Corpus& test, std::span<const Detector* const> detectors,
                             std::span<const ImportedPredictions> imports) {
  const std::size_t n = test.size();
  SpanSequences gold_spans(n);
  TagSequences gold_tags(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold_tags[i] = gold_tags_of(test.sentences[i], i);
    gold_spans[i] = spans_from_tags(gold_tags[i], Validation::Lenient);
  }

  BenchmarkTable table;
  for (const Detector* d : detectors) {
    SpanSequences spans(n);
    TagSequences tags(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& sentence = test.sentences[i];
      spans[i] = d->detect(sentence);
      if (const auto bad = check_spans(spans[i], sentence.size()); !bad.empty()) {
        throw Error("detector " + d->name() + ", sentence " + std::to_string(i) + ": " + bad);
      }
      tags[i] = tags_from_spans(spans[i], sentence.size());
    }
    table.rows.push_back(score_row(d->name(), gold_spans, gold_tags, spans, tags));
  }

  for (const auto& imp : imports) {
    const auto& sentences = imp.corpus.sentences;
    if (sentences.size() != n) {
      throw ImportMisalignment(std::min(sentences.size(), n), imp.name + " has " + std::to_string(sentences.size()) +
                                                                  " sentences, test has " + std::to_string(n));
    }
    SpanSequences spans(n);
    TagSequences tags(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ps = sentences[i];
      const auto& ts = test.sentences[i];
      if (ps.size() != ts.size()) {
        throw ImportMisalignment(i, imp.name + " has " + std::to_string(ps.size()) + " tokens, test has " +
                                        std::to_string(ts.size()));
      }
      for (std::size_t t = 0; t < ps.size(); ++t) {
        if (ps.tokens[t].text != ts.tokens[t].text) {
          throw ImportMisalignment(i, imp.name + " token " + std::to_string(t) + " is '" + ps.tokens[t].text +
                                          "', test has '" + ts.tokens[t].text + "'");
        }
      }
      if (!ps.gold_tags) throw ImportMisalignment(i, imp.name + " has no tag column");
      tags[i] = *ps.gold_tags;
      spans[i] = spans_from_tags(tags[i], Validation::Lenient);
    }
    table.rows.push_back(score_row(imp.name, gold_spans, gold_tags, spans, tags));
  }

  std::stable_sort(table.rows.begin(), table.rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
    if (a.entity.micro.f1 != b.entity.micro.f1) return a.entity.micro.f1 > b.entity.micro.f1;
    return a.name < b.name;
  });
  return table;
}

std::string markdown_row(std::string_view name, const Scores& s) {
  return "| " + std::string(name) + " | " + two_decimals(s.precision) + " | " + two_decimals(s.recall) + " | " +
         two_decimals(s.f1) + " |";
}

std::string render(const BenchmarkTable& table, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << kCsvHeader << '\n';
    for (const auto& row : table.rows) {
      csv_report(out, row.name, row.entity);
      csv_report(out, row.name, row.token);
    }
    return out.str();
  }
  markdown_summary(out, table, EvalMode::Entity, "Entity level (micro, exact match)");
  markdown_summary(out, table, EvalMode::Token, "Token level (micro)");
  markdown_breakdown(out, table, EvalMode::Entity, "Entity level per label");
  markdown_breakdown(out, table, EvalMode::Token, "Token level per label");
  return out.str();
}

std::vector<CsvRecord> parse_report_csv(std::string_view text) {
  std::vector<CsvRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw Error("report csv: unexpected header '" + std::string(line) + "'");
      header = false;
      continue;
    }
    const auto f = csv_split(line, line_no);
    if (f.size() != 9) throw Error("report csv line " + std::to_string(line_no) + ": expected 9 fields");
    CsvRecord r;
    r.model = f[0];
    r.mode = f[1];
    r.label = f[2];
    r.precision = parse_number<double>(f[3], line_no);
    r.recall = parse_number<double>(f[4], line_no);
    r.f1 = parse_number<double>(f[5], line_no);
    r.true_positive = parse_number<std::size_t>(f[6], line_no);
    r.false_positive = parse_number<std::size_t>(f[7], line_no);
    r.false_negative = parse_number<std::size_t>(f[8], line_no);
    out.push_back(std::move(r));
  }
  if (header) throw Error("report csv: missing header");
  return out;
}

std::string reference_gap(const BenchmarkRow& row, double reference_f1) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s: entity F1 %.4f (gap %+.4f), token F1 %.4f (gap %+.4f) vs reference %.2f",
                row.name.c_str(), row.entity.micro.f1, row.entity.micro.f1 - reference_f1, row.token.micro.f1,
                row.token.micro.f1 - reference_f1, reference_f1);
  return buf;
}

}  // namespace textanon
