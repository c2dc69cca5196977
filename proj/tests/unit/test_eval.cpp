#include <doctest.h>

#include "oracles.hpp"

#include <textanon/error.hpp>
#include <textanon/eval.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace textanon;

namespace {

std::vector<NerTag> tags(std::initializer_list<const char*> texts) {
  std::vector<NerTag> out;
  for (const char* t : texts) out.push_back(*parse_tag(t));
  return out;
}

void check_f1_identity(const Scores& s) {
  const double expect = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  CHECK(s.f1 == doctest::Approx(expect).epsilon(1e-12));
}

void check_report(const EvalReport& r) {
  Counts sum;
  for (const auto& [label, c] : r.per_label) {
    sum += c;
    CHECK(c.true_positive + c.false_positive + c.false_negative > 0);
    check_f1_identity(r.label(label));
  }
  CHECK(sum == r.micro_counts);
  CHECK(r.micro == Scores::from(r.micro_counts));
  check_f1_identity(r.micro);
}

/// Writes `corpus` with `predicted` appended as the last column.
std::filesystem::path write_predictions(const Corpus& corpus, const std::vector<std::vector<NerTag>>& predicted,
                                        const std::string& stem) {
  const auto path = std::filesystem::temp_directory_path() / (stem + ".conll");
  std::ofstream out(path);
  write_conll(out, corpus, predicted);
  return path;
}

/// Detects exactly the gold spans but relabels one label.
class Relabel final : public Detector {
 public:
  Relabel(std::string name, std::string from, std::string to)
      : name_(std::move(name)), from_(std::move(from)), to_(std::move(to)) {}
  std::string name() const override { return name_; }
  std::vector<EntitySpan> detect(const Sentence& s) const override {
    auto spans = spans_from_tags(*s.gold_tags);
    for (auto& sp : spans) {
      if (sp.label == from_) sp.label = to_;
    }
    return spans;
  }

 private:
  std::string name_, from_, to_;
};

}  // namespace

TEST_CASE("entity metrics examples") {
  const std::vector<std::vector<EntitySpan>> gold = {{{0, 2, "PER", 1.0}, {3, 4, "LOC", 1.0}}};
  const auto perfect = entity_prf(gold, gold);
  CHECK(perfect.micro == Scores{1.0, 1.0, 1.0});
  CHECK(perfect.macro == Scores{1.0, 1.0, 1.0});

  const std::vector<std::vector<EntitySpan>> half = {{{0, 2, "PER", 1.0}, {3, 4, "ORG", 1.0}}};
  const auto r = entity_prf(gold, half);
  CHECK(r.micro_counts == Counts{1, 1, 1});
  CHECK(r.micro.precision == 0.5);
  CHECK(r.micro.recall == 0.5);
  CHECK(r.micro.f1 == 0.5);
  CHECK(r.per_label.size() == 3);
  CHECK(r.label("ORG") == Scores{0.0, 0.0, 0.0});

  const std::vector<std::vector<EntitySpan>> none = {{}};
  const auto empty = entity_prf(gold, none);
  CHECK(empty.micro == Scores{0.0, 0.0, 0.0});
  CHECK(empty.micro_counts == Counts{0, 0, 2});

  // Boundary error: no partial credit.
  const std::vector<std::vector<EntitySpan>> shifted = {{{0, 1, "PER", 1.0}, {3, 4, "LOC", 1.0}}};
  CHECK(entity_prf(gold, shifted).label("PER").f1 == 0.0);

  // A duplicated prediction only matches once.
  const std::vector<std::vector<EntitySpan>> dup = {{{0, 2, "PER", 1.0}, {0, 2, "PER", 0.5}}};
  CHECK(entity_prf(std::vector<std::vector<EntitySpan>>{{{0, 2, "PER", 1.0}}}, dup).micro_counts == Counts{1, 1, 0});

  CHECK_THROWS_AS(entity_prf(gold, std::vector<std::vector<EntitySpan>>{}), AlignmentError);
}

TEST_CASE("swapping gold and prediction swaps FP and FN") {
  std::mt19937_64 rng(1);
  const std::vector<std::string> labels = {"PER", "LOC", "ORG"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::vector<EntitySpan>> a, b;
    std::vector<std::vector<NerTag>> ta, tb;
    for (int k = 0; k < 4; ++k) {
      const auto n = rng() % 8;
      ta.push_back(testing::random_bio2(rng, n, labels));
      tb.push_back(testing::random_bio2(rng, n, labels));
      a.push_back(spans_from_tags(ta.back()));
      b.push_back(spans_from_tags(tb.back()));
    }
    for (const auto& [ab, ba] : {std::pair{entity_prf(a, b), entity_prf(b, a)}, std::pair{token_prf(ta, tb), token_prf(tb, ta)}}) {
      check_report(ab);
      CHECK(ab.micro_counts.true_positive == ba.micro_counts.true_positive);
      CHECK(ab.micro_counts.false_positive == ba.micro_counts.false_negative);
      CHECK(ab.micro_counts.false_negative == ba.micro_counts.false_positive);
      CHECK(ab.micro.f1 == doctest::Approx(ba.micro.f1));
    }
  }
}

TEST_CASE("token metrics examples") {
  const std::vector<std::vector<NerTag>> gold = {tags({"B-PER", "I-PER", "O"})};
  CHECK(token_prf(gold, gold).micro == Scores{1.0, 1.0, 1.0});

  const std::vector<std::vector<NerTag>> one_wrong = {tags({"B-PER", "O", "O"})};
  const auto tok = token_prf(gold, one_wrong);
  CHECK(tok.micro.recall == 0.5);
  CHECK(tok.micro.precision == 1.0);
  std::vector<std::vector<EntitySpan>> gs = {spans_from_tags(gold[0])}, ps = {spans_from_tags(one_wrong[0])};
  CHECK(entity_prf(gs, ps).micro.f1 == 0.0);

  const std::vector<std::vector<NerTag>> all_o = {tags({"O", "O"})};
  const auto vacuous = token_prf(all_o, all_o);
  CHECK(vacuous.per_label.empty());
  CHECK(vacuous.micro_counts == Counts{});
  CHECK(vacuous.micro == Scores{});
  CHECK(vacuous.macro == Scores{});
  CHECK(vacuous.mode == EvalMode::Token);

  CHECK_THROWS_AS(token_prf(gold, all_o), LengthMismatch);
  CHECK_THROWS_AS(token_prf(gold, std::vector<std::vector<NerTag>>{}), AlignmentError);
}

TEST_CASE("markdown row formatting") {
  CHECK(markdown_row("CRF", {0.93, 0.93, 0.93}) == "| CRF | 0.93 | 0.93 | 0.93 |");
  CHECK(markdown_row("X", {0.925, 1.0, 0.0}) == "| X | 0.93 | 1.00 | 0.00 |");
}

TEST_CASE("benchmark table, sorting and rendering") {
  const auto test = testing::synthetic_corpus(40, 31);
  const GoldDetector gold;
  const Relabel bad_loc("Swapped", "LOC", "ORG");
  const Relabel also_perfect("Echo", "NONE", "NONE");
  const std::vector<const Detector*> detectors = {&bad_loc, &gold, &also_perfect};
  const auto table = run_benchmark(test, detectors);
  REQUIRE(table.rows.size() == 3);
  // Ties on F1 break by name.
  CHECK(table.rows[0].name == "Echo");
  CHECK(table.rows[1].name == "Gold");
  CHECK(table.rows[2].name == "Swapped");
  CHECK(table.rows[1].entity.micro == Scores{1.0, 1.0, 1.0});
  CHECK(table.rows[1].token.micro == Scores{1.0, 1.0, 1.0});
  for (const auto& row : table.rows) {
    check_report(row.entity);
    check_report(row.token);
  }
  CHECK(table.find("Swapped"));
  CHECK_FALSE(table.find("nope"));
  CHECK(run_benchmark(test, detectors) == table);

  const auto md = render(table, ReportFormat::Markdown);
  CHECK(md.find("| Gold | 1.00 | 1.00 | 1.00 |") != std::string::npos);
  CHECK(md.find("| Model | Precision | Recall | F1 |") != std::string::npos);

  const auto csv = render(table, ReportFormat::Csv);
  const auto records = parse_report_csv(csv);
  std::size_t micro_rows = 0;
  for (const auto& rec : records) {
    const auto* row = table.find(rec.model);
    REQUIRE(row);
    const auto& report = rec.mode == "entity" ? row->entity : row->token;
    Scores expect;
    Counts counts;
    if (rec.label == "micro") {
      expect = report.micro;
      counts = report.micro_counts;
      ++micro_rows;
    } else if (rec.label == "macro") {
      expect = report.macro;
    } else {
      REQUIRE(report.per_label.count(rec.label));
      expect = report.label(rec.label);
      counts = report.per_label.at(rec.label);
    }
    CHECK(std::abs(rec.precision - expect.precision) <= 0.005 + 1e-12);
    CHECK(std::abs(rec.f1 - expect.f1) <= 0.005 + 1e-12);
    if (rec.label != "macro") CHECK(Counts{rec.true_positive, rec.false_positive, rec.false_negative} == counts);
  }
  CHECK(micro_rows == 6);
  // Rendering the parsed records again is a fixed point.
  CHECK(render(table, ReportFormat::Csv) == csv);
  CHECK_THROWS_AS(parse_report_csv("model,mode\nx\n"), Error);
}

TEST_CASE("labels with no counts are omitted") {
  const auto corpus = parse_conll("John B-PER\nleft O\n");
  const GoldDetector gold;
  const std::vector<const Detector*> d = {&gold};
  const auto table = run_benchmark(corpus, d);
  CHECK(table.rows[0].entity.per_label.size() == 1);
  const auto md = render(table, ReportFormat::Markdown);
  CHECK(md.find("| PER |") != std::string::npos);
  CHECK(md.find("LOC") == std::string::npos);
}

TEST_CASE("imported predictions") {
  const auto test = testing::synthetic_corpus(30, 41);
  std::vector<std::vector<NerTag>> gold_tags;
  for (const auto& s : test.sentences) gold_tags.push_back(*s.gold_tags);

  const auto self = load_predictions(write_predictions(test, gold_tags, "textanon_self_import"));
  CHECK(self.name == "textanon_self_import");
  const std::vector<ImportedPredictions> imports = {self};
  const auto table = run_benchmark(test, {}, imports);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].entity.micro == Scores{1.0, 1.0, 1.0});
  CHECK(table.rows[0].token.micro == Scores{1.0, 1.0, 1.0});

  auto shorter = test;
  shorter.sentences.pop_back();
  std::vector<std::vector<NerTag>> shorter_tags(gold_tags.begin(), gold_tags.end() - 1);
  const std::vector<ImportedPredictions> short_import = {
      load_predictions(write_predictions(shorter, shorter_tags, "textanon_short_import"), "short")};
  CHECK_THROWS_AS(run_benchmark(test, {}, short_import), ImportMisalignment);

  auto renamed = test;
  renamed.sentences[3].tokens[0].text = "Different";
  const std::vector<ImportedPredictions> wrong_text = {
      load_predictions(write_predictions(renamed, gold_tags, "textanon_text_import"), "text")};
  try {
    run_benchmark(test, {}, wrong_text);
    FAIL("expected ImportMisalignment");
  } catch (const ImportMisalignment& e) {
    CHECK(e.sentence_index() == 3);
  }
  for (const char* stem : {"textanon_self_import", "textanon_short_import", "textanon_text_import"}) {
    std::filesystem::remove(std::filesystem::temp_directory_path() / (std::string(stem) + ".conll"));
  }
}

TEST_CASE("reference gap line") {
  BenchmarkRow row;
  row.name = "CRF";
  row.entity.micro = {0.9, 0.9, 0.9};
  row.token.micro = {0.95, 0.95, 0.95};
  const auto line = reference_gap(row, 0.93);
  CHECK(line.find("CRF") == 0);
  CHECK(line.find("-0.0300") != std::string::npos);
  CHECK(line.find("+0.0200") != std::string::npos);
}
