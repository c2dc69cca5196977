#include <doctest.h>

#include "oracles.hpp"

#include <textanon/anonymise.hpp>
#include <textanon/error.hpp>

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <sstream>

using namespace textanon;

namespace {

const std::string kSentence = "John Smith works at HSBC Bank";

std::vector<EntitySpan> example_spans(const std::string& second_label) {
  return {{0, 2, "PER", 1.0}, {4, 6, second_label, 1.0}};
}

std::string anonymise(const std::string& text, std::span<const EntitySpan> spans, const Strategy& strategy) {
  return apply(plan(tokenize_raw(text), spans, strategy)).text;
}

/// Spans over random tokens, non-overlapping.
std::vector<EntitySpan> random_spans(std::mt19937_64& rng, std::size_t tokens) {
  static const std::vector<std::string> labels = {"PER", "ORG", "LOC", "MISC"};
  std::vector<EntitySpan> out;
  std::size_t i = 0;
  while (i < tokens) {
    if (rng() % 3 == 0) {
      const auto len = 1 + rng() % std::min<std::size_t>(3, tokens - i);
      out.push_back({i, i + len, labels[rng() % labels.size()], 1.0});
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

/// Marks every capitalised token as a one-token PER span.
class CapitalisedAsPerson final : public Detector {
 public:
  std::string name() const override { return "caps"; }
  std::vector<EntitySpan> detect(const Sentence& s) const override {
    std::vector<EntitySpan> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (std::isupper(static_cast<unsigned char>(s.tokens[i].text[0]))) out.push_back({i, i + 1, "PER", 1.0});
    }
    return out;
  }
};

}  // namespace

TEST_CASE("golden anonymisation of the example sentence") {
  const auto org = example_spans("ORG");
  CHECK(anonymise(kSentence, org, Removal{}) == "<REF> works at <REF>");
  CHECK(anonymise(kSentence, org, Categorisation{}) == "<PERSON> works at <ORG>");

  // The example table labels the bank a location.
  const auto loc = example_spans("LOC");
  CHECK(anonymise(kSentence, loc, Categorisation{}) == "<PERSON> works at <LOCATION>");

  const auto doc = apply(plan(tokenize_raw(kSentence), org, Pseudonymisation{}));
  REQUIRE(doc.audit.size() == 2);
  const auto dicts = Dictionaries::bundled();
  const auto& per = *dicts.find("PER");
  const auto& orgs = *dicts.find("ORG");
  CHECK(std::find(per.begin(), per.end(), doc.audit[0].replacement) != per.end());
  CHECK(std::find(orgs.begin(), orgs.end(), doc.audit[1].replacement) != orgs.end());
  CHECK(doc.text == doc.audit[0].replacement + " works at " + doc.audit[1].replacement);
}

TEST_CASE("audit entries record both coordinate systems") {
  const auto doc = apply(plan(tokenize_raw(kSentence), example_spans("ORG"), Removal{}));
  REQUIRE(doc.audit.size() == 2);
  CHECK(doc.audit[0] == AuditEntry{"John Smith", "<REF>", "PER", 0, 10, 0, 5});
  CHECK(doc.audit[1] == AuditEntry{"HSBC Bank", "<REF>", "ORG", 20, 29, 15, 20});
  for (const auto& e : doc.audit) {
    CHECK(doc.text.substr(e.new_start, e.new_end - e.new_start) == e.replacement);
    CHECK(kSentence.substr(e.original_start, e.original_end - e.original_start) == e.original);
  }
}

TEST_CASE("empty plan leaves the text unchanged") {
  const auto doc = apply(plan(tokenize_raw(kSentence), std::vector<EntitySpan>{}, Removal{}));
  CHECK(doc.text == kSentence);
  CHECK(doc.audit.empty());
  CHECK(restore(doc.text, doc.audit) == kSentence);
}

TEST_CASE("plan rejects overlapping and out-of-range spans") {
  const auto s = tokenize_raw(kSentence);
  const std::vector<EntitySpan> overlap = {{0, 3, "PER", 1.0}, {2, 4, "ORG", 1.0}};
  CHECK_THROWS_AS(plan(s, overlap, Removal{}), OverlappingSpans);
  const std::vector<EntitySpan> beyond = {{5, 7, "ORG", 1.0}};
  CHECK_THROWS_AS(plan(s, beyond, Removal{}), LengthMismatch);
  const std::vector<EntitySpan> unknown = {{0, 1, "WEIRD", 1.0}};
  CHECK_THROWS_AS(plan(s, unknown, Categorisation{}), UnknownLabel);
  CHECK_THROWS_AS(plan(s, unknown, Pseudonymisation{}), NoDictionaryForLabel);
}

TEST_CASE("audit reverse application reconstructs the original") {
  std::mt19937_64 rng(3);
  const auto corpus = testing::synthetic_corpus(150, 77);
  const std::vector<Strategy> strategies = {Removal{}, Categorisation{}, Pseudonymisation{}};
  for (const auto& sentence : corpus.sentences) {
    const auto s = tokenize_raw(sentence.text);
    const auto spans = random_spans(rng, s.size());
    for (const auto& strategy : strategies) {
      const auto doc = apply(plan(s, spans, strategy));
      CHECK(doc.audit.size() == spans.size());
      CHECK(restore(doc.text, doc.audit) == sentence.text);
    }
  }
}

TEST_CASE("removal and categorisation leave no original surface behind") {
  std::mt19937_64 rng(5);
  const auto corpus = testing::synthetic_corpus(150, 78);
  for (const auto& sentence : corpus.sentences) {
    const auto s = tokenize_raw(sentence.text);
    const auto spans = random_spans(rng, s.size());
    // Surfaces that also occur outside every span are excluded from the check.
    std::string outside;
    std::size_t next = 0;
    for (const auto& sp : spans) {
      for (std::size_t t = next; t < sp.start_token; ++t) outside += s.tokens[t].text + " ";
      next = sp.end_token;
    }
    for (std::size_t t = next; t < s.size(); ++t) outside += s.tokens[t].text + " ";
    for (const Strategy& strategy : {Strategy{Removal{}}, Strategy{Categorisation{}}}) {
      const auto doc = apply(plan(s, spans, strategy));
      for (const auto& e : doc.audit) {
        if (outside.find(e.original) != std::string::npos) continue;
        CHECK(doc.text.find(e.original) == std::string::npos);
      }
    }
  }
}

TEST_CASE("pseudonyms are deterministic and never equal the surface") {
  const auto dicts = Dictionaries::bundled();
  CHECK(pseudonym_for("PER", "John Smith", 13, dicts) == pseudonym_for("PER", "John Smith", 13, dicts));

  std::set<std::string> across_seeds;
  for (std::uint64_t seed = 0; seed < 32; ++seed) across_seeds.insert(pseudonym_for("PER", "John Smith", seed, dicts));
  CHECK(across_seeds.size() > 1);

  // Every dictionary entry used as the surface still gets a different pseudonym.
  std::mt19937_64 rng(9);
  for (const std::string label : {"PER", "ORG", "LOC", "MISC", "EMAIL"}) {
    for (const auto& entry : *dicts.find(label)) {
      for (int k = 0; k < 20; ++k) CHECK(pseudonym_for(label, entry, rng(), dicts) != entry);
    }
  }

  Dictionaries single;
  single.set("PER", {"Only One"});
  CHECK(pseudonym_for("PER", "Someone", 1, single) == "Only One");
  CHECK_THROWS_AS(pseudonym_for("PER", "Only One", 1, single), NoDictionaryForLabel);
  CHECK_THROWS_AS(pseudonym_for("ORG", "Acme", 1, single), NoDictionaryForLabel);
  Dictionaries empty_list;
  empty_list.set("PER", {});
  CHECK_THROWS_AS(pseudonym_for("PER", "x", 1, empty_list), NoDictionaryForLabel);
}

TEST_CASE("plan_text handles multiple lines") {
  const CapitalisedAsPerson det;
  const std::string text = "ask Ann today\nthen Bob\n\nnone here";
  const auto doc = apply(plan_text(text, det, Categorisation{}));
  CHECK(doc.text == "ask <PERSON> today\nthen <PERSON>\n\nnone here");
  REQUIRE(doc.audit.size() == 2);
  CHECK(doc.audit[1].original_start == text.find("Bob"));
  CHECK(restore(doc.text, doc.audit) == text);
  CHECK_THROWS_AS(restore("tampered", doc.audit), Error);
}

TEST_CASE("plan_corpus joins sentences with newlines") {
  const auto corpus = parse_conll("John B-PER\nleft O\n\nMary B-PER\n");
  const GoldDetector gold;
  const auto doc = apply(plan_corpus(corpus, gold, Removal{}));
  CHECK(doc.text == "<REF> left\n<REF>");
}

TEST_CASE("audit JSON lines round trip") {
  const auto doc = apply(plan(tokenize_raw("Say \"hi\" to John Smith"), std::vector<EntitySpan>{{4, 6, "PER", 1.0}},
                              Pseudonymisation{}));
  std::stringstream ss;
  write_audit(ss, doc.audit);
  const auto back = read_audit(ss);
  CHECK(back == doc.audit);
  std::istringstream bad("{\"label\": 3}\n");
  CHECK_THROWS_AS(read_audit(bad), LoadError);
  std::istringstream junk("not json\n");
  CHECK_THROWS_AS(read_audit(junk), LoadError);
}
