#include "textanon/pipeline.hpp"

#include "textanon/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace textanon {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Bytes >= 0x80 belong to multi-byte UTF-8 sequences and count as word characters.
bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

bool is_internal_joiner(unsigned char c) {
  switch (c) {
    case '-':
    case '\'':
    case '.':
    case '@':
    case '_':
    case '/':
    case ':':
      return true;
    default:
      return false;
  }
}

void push_token(Sentence& s, std::string_view text, std::size_t begin, std::size_t end) {
  Token t;
  t.text = std::string(text.substr(begin, end - begin));
  t.start_char = begin;
  s.tokens.push_back(std::move(t));
}

void split_chunk(Sentence& s, std::string_view text, std::size_t begin, std::size_t end) {
  std::size_t word_start = begin;
  for (std::size_t i = begin; i < end; ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!is_punct(c)) continue;
    const bool internal = is_internal_joiner(c) && i > begin && i + 1 < end &&
                          is_word(static_cast<unsigned char>(text[i - 1])) &&
                          is_word(static_cast<unsigned char>(text[i + 1]));
    if (internal) continue;
    if (i > word_start) push_token(s, text, word_start, i);
    push_token(s, text, i, i + 1);
    word_start = i + 1;
  }
  if (end > word_start) push_token(s, text, word_start, end);
}

}  // namespace

Sentence tokenize_raw(std::string_view text) {
  Sentence s;
  s.text = std::string(text);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) split_chunk(s, text, start, i);
  }
  return s;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) ++counts[t.text];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= std::max<std::size_t>(min_count, 1)) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  v.tokens_.reserve(kept.size());
  for (auto& [tok, n] : kept) {
    v.ids_.emplace(tok, static_cast<std::uint32_t>(v.tokens_.size() + reserved));
    v.tokens_.push_back(std::move(tok));
  }
  return v;
}

std::uint32_t Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(std::uint32_t id) const {
  static const std::string pad = "<pad>";
  static const std::string unk = "<unk>";
  if (id == pad_id) return pad;
  if (id == unk_id || id - reserved >= tokens_.size()) return unk;
  return tokens_[id - reserved];
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.find(std::string(token)) != ids_.end();
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw LoadError("vocabulary: empty line at id " + std::to_string(v.size()));
    if (!v.ids_.emplace(line, static_cast<std::uint32_t>(v.size())).second) {
      throw LoadError("vocabulary: duplicate token '" + line + "'");
    }
    v.tokens_.push_back(line);
  }
  return v;
}

EncodedSentence encode(const Sentence& sentence, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw LengthMismatch("max_len must be at least 1");
  EncodedSentence e;
  e.attention_length = std::min(sentence.size(), max_len);
  e.ids.assign(max_len, Vocabulary::pad_id);
  for (std::size_t i = 0; i < e.attention_length; ++i) e.ids[i] = vocab.id(sentence.tokens[i].text);
  return e;
}

CorpusSplits split_corpus(const Corpus& corpus, const std::array<double, 3>& ratios,
                          std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw RatioError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw RatioError("split ratios must sum to 1");

  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);

  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(n * ratios[0])));
  const auto n_val =
      std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(n * ratios[1])));

  CorpusSplits out;
  out.train.split = Split::Train;
  out.validation.split = Split::Validation;
  out.test.split = Split::Test;
  for (Corpus* c : {&out.train, &out.validation, &out.test}) c->columns = corpus.columns;
  for (std::size_t k = 0; k < n; ++k) {
    Corpus& target = k < n_train ? out.train : (k < n_train + n_val ? out.validation : out.test);
    target.sentences.push_back(corpus.sentences[order[k]]);
  }
  for (Corpus* c : {&out.train, &out.validation, &out.test}) {
    if (!c->empty()) c->document_starts = {0};
  }
  return out;
}

CorpusSplits load_splits(const Manifest& manifest) {
  if (manifest.data) {
    return split_corpus(load_conll(*manifest.data), manifest.ratios, manifest.seed);
  }
  CorpusSplits out;
  if (manifest.train) out.train = load_conll(*manifest.train, {true, Split::Train});
  if (manifest.validation) out.validation = load_conll(*manifest.validation, {true, Split::Validation});
  if (manifest.test) out.test = load_conll(*manifest.test, {true, Split::Test});
  out.train.split = Split::Train;
  out.validation.split = Split::Validation;
  out.test.split = Split::Test;
  return out;
}

Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) throw RatioError("subsample fraction must be in (0, 1]");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  order.resize(std::max<std::size_t>(keep, order.empty() ? 0 : 1));
  std::sort(order.begin(), order.end());

  Corpus out;
  out.split = corpus.split;
  out.columns = corpus.columns;
  for (auto i : order) out.sentences.push_back(corpus.sentences[i]);
  if (!out.empty()) out.document_starts = {0};
  return out;
}

std::string check_spans(std::span<const EntitySpan> spans, std::size_t length) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start_token >= s.end_token) return "span " + std::to_string(i) + " is empty";
    if (s.end_token > length) return "span " + std::to_string(i) + " exceeds the sentence";
    if (!(s.score >= 0.0 && s.score <= 1.0)) return "span " + std::to_string(i) + " score outside [0,1]";
    if (s.label.empty()) return "span " + std::to_string(i) + " has no label";
    if (i > 0 && spans[i - 1].end_token > s.start_token) {
      return "span " + std::to_string(i) + " overlaps or precedes its predecessor";
    }
  }
  return {};
}

std::vector<EntitySpan> GoldDetector::detect(const Sentence& sentence) const {
  if (!sentence.gold_tags) return {};
  return spans_from_tags(*sentence.gold_tags, Validation::Lenient);
}

}  // namespace textanon
