#include <doctest.h>

#include "oracles.hpp"

#include <textanon/error.hpp>
#include <textanon/pipeline.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

using namespace textanon;

namespace {

std::vector<std::string> texts(const Sentence& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tokens) out.push_back(t.text);
  return out;
}

Corpus corpus_of(std::initializer_list<std::initializer_list<const char*>> sentences) {
  Corpus c;
  for (const auto& words : sentences) {
    std::vector<std::string> w(words.begin(), words.end());
    auto s = Sentence::from_words(w);
    s.gold_tags = std::vector<NerTag>(w.size());
    c.sentences.push_back(std::move(s));
  }
  return c;
}

}  // namespace

TEST_CASE("tokenize_raw examples") {
  const auto s = tokenize_raw("John Smith works at HSBC Bank");
  REQUIRE(s.size() == 6);
  const std::vector<std::size_t> starts = {0, 5, 11, 17, 20, 25};
  for (std::size_t i = 0; i < 6; ++i) CHECK(s.tokens[i].start_char == starts[i]);

  CHECK(tokenize_raw("").empty());
  CHECK(texts(tokenize_raw("a,b")) == std::vector<std::string>{"a", ",", "b"});
  CHECK(texts(tokenize_raw("(well-known) don't.")) ==
        std::vector<std::string>{"(", "well-known", ")", "don't", "."});
  CHECK(texts(tokenize_raw("mail a@b.co now")) == std::vector<std::string>{"mail", "a@b.co", "now"});
}

TEST_CASE("tokenize_raw offset fidelity on random text") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab Z9 .,;:-'@/()\t\n\"!?";
  for (int iter = 0; iter < 2000; ++iter) {
    std::string text;
    const auto n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    const auto s = tokenize_raw(text);
    CHECK(s.text == text);
    std::size_t prev_end = 0;
    for (const auto& t : s.tokens) {
      CHECK_FALSE(t.text.empty());
      CHECK(t.start_char >= prev_end);
      CHECK(text.substr(t.start_char, t.text.size()) == t.text);
      prev_end = t.end_char();
    }
  }
}

TEST_CASE("vocabulary build, lookup and ordering") {
  const auto c = corpus_of({{"a", "a", "b"}, {"a", "c", "c"}});
  const auto v = Vocabulary::build(c, 2);
  CHECK(v.contains("a"));
  CHECK(v.contains("c"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("a") == Vocabulary::reserved);
  CHECK(v.id("c") == Vocabulary::reserved + 1);
  CHECK(v.id("zzz") == Vocabulary::unk_id);
  CHECK(v.size() == Vocabulary::reserved + 2);

  CHECK(Vocabulary::build(Corpus{}, 2).size() == Vocabulary::reserved);

  SUBCASE("deterministic and injective on a larger corpus") {
    const auto big = testing::synthetic_corpus(300, 4);
    const auto v1 = Vocabulary::build(big, 1);
    const auto v2 = Vocabulary::build(big, 1);
    std::set<std::uint32_t> ids;
    for (std::uint32_t id = Vocabulary::reserved; id < v1.size(); ++id) {
      CHECK(v1.token(id) == v2.token(id));
      CHECK(v1.id(v1.token(id)) == id);
      ids.insert(id);
    }
    CHECK(ids.size() == v1.size() - Vocabulary::reserved);
  }
  SUBCASE("save and load round trip") {
    std::stringstream ss;
    v.save(ss);
    const auto back = Vocabulary::load(ss);
    CHECK(back.size() == v.size());
    CHECK(back.id("a") == v.id("a"));
    CHECK(back.id("c") == v.id("c"));
  }
}

TEST_CASE("encode pads, truncates and maps unknowns") {
  const auto c = corpus_of({{"x", "x", "y", "y"}});
  const auto v = Vocabulary::build(c, 2);
  const std::vector<std::string> three = {"x", "y", "q"};
  const auto e = encode(Sentence::from_words(three), v, 5);
  CHECK(e.ids.size() == 5);
  CHECK(e.attention_length == 3);
  CHECK(e.ids[2] == Vocabulary::unk_id);
  CHECK(e.ids[3] == Vocabulary::pad_id);
  CHECK(e.ids[4] == Vocabulary::pad_id);

  const std::vector<std::string> seven(7, "x");
  const auto t = encode(Sentence::from_words(seven), v, 5);
  CHECK(t.ids.size() == 5);
  CHECK(t.attention_length == 5);

  for (std::size_t len = 0; len < 20; ++len) {
    const std::vector<std::string> w(len, "y");
    CHECK(encode(Sentence::from_words(w), v, 8).ids.size() == 8);
  }
}

TEST_CASE("split_corpus sizes, determinism and partition") {
  const auto c = testing::synthetic_corpus(100, 1);
  const auto s = split_corpus(c, {0.8, 0.1, 0.1}, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);

  const auto again = split_corpus(c, {0.8, 0.1, 0.1}, 7);
  for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(again.train.sentences[i].text == s.train.sentences[i].text);

  // Sentence texts can repeat, so compare multisets.
  std::multiset<std::string> all, parts;
  for (const auto& x : c.sentences) all.insert(x.text);
  for (const Corpus* part : {&s.train, &s.validation, &s.test}) {
    for (const auto& x : part->sentences) parts.insert(x.text);
  }
  CHECK(all == parts);

  CHECK_THROWS_AS(split_corpus(c, {0.8, 0.1, 0.2}, 7), RatioError);
  CHECK_THROWS_AS(split_corpus(c, {1.0, 0.0, 0.0}, 7), RatioError);
}

TEST_CASE("split_corpus is a true partition of sentence indices") {
  Corpus c;
  for (int i = 0; i < 57; ++i) {
    const std::vector<std::string> w = {"s" + std::to_string(i)};
    c.sentences.push_back(Sentence::from_words(w));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = split_corpus(c, {0.5, 0.25, 0.25}, seed);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const Corpus* part : {&s.train, &s.validation, &s.test}) {
      for (const auto& x : part->sentences) {
        CHECK(seen.insert(x.text).second);
        ++total;
      }
    }
    CHECK(total == 57);
  }
}

TEST_CASE("subsample keeps the requested share in corpus order") {
  const auto c = testing::synthetic_corpus(200, 2);
  const auto s = subsample(c, 0.1, 13);
  CHECK(s.size() == 20);
  const auto again = subsample(c, 0.1, 13);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.sentences[i].text == again.sentences[i].text);
}

TEST_CASE("check_spans enforces the detector contract") {
  CHECK(check_spans(std::vector<EntitySpan>{{0, 1, "A", 0.5}, {1, 3, "B", 1.0}}, 3).empty());
  CHECK_FALSE(check_spans(std::vector<EntitySpan>{{0, 2, "A", 0.5}, {1, 3, "B", 1.0}}, 3).empty());
  CHECK_FALSE(check_spans(std::vector<EntitySpan>{{2, 4, "A", 0.5}}, 3).empty());
  CHECK_FALSE(check_spans(std::vector<EntitySpan>{{1, 1, "A", 0.5}}, 3).empty());
  CHECK_FALSE(check_spans(std::vector<EntitySpan>{{0, 1, "A", 1.5}}, 3).empty());
  CHECK_FALSE(check_spans(std::vector<EntitySpan>{{0, 1, "", 0.5}}, 3).empty());
}

TEST_CASE("gold detector returns the gold spans") {
  const auto c = testing::synthetic_corpus(20, 8);
  GoldDetector gold;
  for (const auto& s : c.sentences) {
    CHECK(gold.detect(s) == spans_from_tags(*s.gold_tags));
    CHECK(check_spans(gold.detect(s), s.size()).empty());
  }
}
