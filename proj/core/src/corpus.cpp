#include "textanon/corpus.hpp"

#include "textanon/error.hpp"
#include "textanon/ini.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace textanon {

namespace {

constexpr std::string_view kDocstart = "-DOCSTART-";

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) cols.push_back(line.substr(start, i - start));
  }
  return cols;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

class CorpusBuilder {
 public:
  explicit CorpusBuilder(const ParseOptions& options) : options_(options) {
    corpus_.split = options.split;
  }

  void add_token(std::size_t line_no, std::span<const std::string_view> cols) {
    const auto tag = parse_tag(cols.back());
    if (!tag) throw UnknownTag(line_no, std::string(cols.back()));

    Token token;
    token.text = std::string(cols.front());
    token.annotations.assign(cols.begin() + 1, cols.end() - 1);
    words_.push_back(std::move(token));
    tags_.push_back(*tag);
  }

  void end_sentence() {
    if (words_.empty()) return;
    if (pending_document_ || corpus_.document_starts.empty()) {
      corpus_.document_starts.push_back(corpus_.sentences.size());
      pending_document_ = false;
    }
    Sentence s;
    for (auto& w : words_) {
      if (!s.text.empty()) s.text.push_back(' ');
      w.start_char = s.text.size();
      s.text += w.text;
      s.tokens.push_back(std::move(w));
    }
    s.gold_tags = options_.normalize_bio2 ? to_bio2(tags_) : std::move(tags_);
    corpus_.sentences.push_back(std::move(s));
    words_.clear();
    tags_.clear();
  }

  void start_document() {
    end_sentence();
    corpus_.docstart_markers = true;
    pending_document_ = true;
  }

  Corpus finish() {
    end_sentence();
    return std::move(corpus_);
  }

 private:
  const ParseOptions& options_;
  Corpus corpus_;
  std::vector<Token> words_;
  std::vector<NerTag> tags_;
  bool pending_document_ = false;
};

void write_tokens_line(std::ostream& out, const Token& token, const NerTag* gold,
                       const NerTag* predicted) {
  out << token.text;
  for (const auto& a : token.annotations) out << ' ' << a;
  if (gold) out << ' ' << gold->str();
  if (predicted) out << ' ' << predicted->str();
  out << '\n';
}

}  // namespace

std::string NerTag::str() const {
  switch (kind) {
    case TagKind::O:
      return "O";
    case TagKind::B:
      return "B-" + label;
    case TagKind::I:
      return "I-" + label;
  }
  return "O";
}

std::optional<NerTag> parse_tag(std::string_view text) {
  if (text == "O") return NerTag::outside();
  if (text.size() < 3 || text[1] != '-') return std::nullopt;
  const std::string label(text.substr(2));
  if (text[0] == 'B') return NerTag::begin(label);
  if (text[0] == 'I') return NerTag::inside(label);
  return std::nullopt;
}

std::vector<NerTag> parse_tags(std::span<const std::string> texts) {
  std::vector<NerTag> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto tag = parse_tag(t);
    if (!tag) throw InvalidScheme("unknown tag '" + t + "'");
    out.push_back(std::move(*tag));
  }
  return out;
}

std::optional<std::string_view> Token::pos() const {
  if (annotations.empty()) return std::nullopt;
  return annotations[0];
}

std::optional<std::string_view> Token::chunk() const {
  if (annotations.size() < 2) return std::nullopt;
  return annotations[1];
}

Sentence Sentence::from_words(std::span<const std::string> words) {
  Sentence s;
  for (const auto& w : words) {
    if (!s.text.empty()) s.text.push_back(' ');
    Token t;
    t.text = w;
    t.start_char = s.text.size();
    s.text += w;
    s.tokens.push_back(std::move(t));
  }
  return s;
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "train";
}

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

Corpus parse_conll(std::istream& in, const ParseOptions& options) {
  CorpusBuilder builder(options);
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (is_blank(view)) {
      builder.end_sentence();
      continue;
    }
    const auto cols = split_columns(view);
    if (cols.front() == kDocstart) {
      builder.start_document();
      continue;
    }
    if (cols.size() < 2) {
      throw MalformedLine(line_no, "expected at least 2 columns, found " +
                                       std::to_string(cols.size()));
    }
    if (expected_columns == 0) {
      expected_columns = cols.size();
    } else if (cols.size() != expected_columns) {
      throw MalformedLine(line_no, "expected " + std::to_string(expected_columns) +
                                       " columns, found " + std::to_string(cols.size()));
    }
    builder.add_token(line_no, cols);
  }
  Corpus corpus = builder.finish();
  corpus.columns = expected_columns;
  return corpus;
}

Corpus parse_conll(std::string_view text, const ParseOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_conll(in, options);
}

Corpus load_conll(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open corpus file '" + path.string() + "'");
  try {
    return parse_conll(in, options);
  } catch (const MalformedLine& e) {
    throw MalformedLine(e.line_no(), e.detail(), path.string());
  } catch (const UnknownTag& e) {
    throw UnknownTag(e.line_no(), e.tag(), path.string());
  }
}

void write_conll(std::ostream& out, const Corpus& corpus,
                 std::span<const std::vector<NerTag>> predictions) {
  if (!predictions.empty() && predictions.size() != corpus.size()) {
    throw LengthMismatch("prediction count does not match sentence count");
  }
  std::size_t next_doc = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.docstart_markers && next_doc < corpus.document_starts.size() &&
        corpus.document_starts[next_doc] == i) {
      ++next_doc;
      const std::size_t cols = std::max<std::size_t>(corpus.columns, 2) +
                               (predictions.empty() ? 0 : 1);
      out << kDocstart;
      for (std::size_t c = 1; c + 1 < cols; ++c) out << " -X-";
      out << " O\n\n";
    }
    const auto& s = corpus.sentences[i];
    if (!predictions.empty() && predictions[i].size() != s.size()) {
      throw LengthMismatch("prediction length mismatch in sentence " + std::to_string(i));
    }
    for (std::size_t t = 0; t < s.size(); ++t) {
      const NerTag* gold = s.gold_tags ? &(*s.gold_tags)[t] : nullptr;
      const NerTag* pred = predictions.empty() ? nullptr : &predictions[i][t];
      write_tokens_line(out, s.tokens[t], gold, pred);
    }
    out << '\n';
  }
}

std::vector<NerTag> to_bio2(std::span<const NerTag> tags) {
  std::vector<NerTag> out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].well_formed()) {
      throw InvalidScheme("malformed tag at position " + std::to_string(i));
    }
    if (out[i].kind != TagKind::I) continue;
    const bool continues = i > 0 && !tags[i - 1].is_outside() && tags[i - 1].label == tags[i].label;
    if (!continues) out[i].kind = TagKind::B;
  }
  return out;
}

std::vector<EntitySpan> spans_from_tags(std::span<const NerTag> tags, Validation validation) {
  std::vector<EntitySpan> spans;
  std::optional<EntitySpan> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end_token = end;
      spans.push_back(std::move(*open));
      open.reset();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    if (!tag.well_formed()) throw InvalidScheme("malformed tag at position " + std::to_string(i));
    switch (tag.kind) {
      case TagKind::O:
        close(i);
        break;
      case TagKind::B:
        close(i);
        open = EntitySpan{i, i + 1, tag.label, 1.0};
        break;
      case TagKind::I:
        if (open && open->label == tag.label) break;
        if (validation == Validation::Strict) {
          throw InvalidScheme("I-" + tag.label + " at position " + std::to_string(i) +
                              " does not continue an entity");
        }
        close(i);
        open = EntitySpan{i, i + 1, tag.label, 1.0};
        break;
    }
  }
  close(tags.size());
  return spans;
}

std::vector<NerTag> tags_from_spans(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<const EntitySpan*> sorted;
  sorted.reserve(spans.size());
  for (const auto& s : spans) {
    if (s.start_token >= s.end_token || s.end_token > length) {
      throw LengthMismatch("span [" + std::to_string(s.start_token) + ", " +
                           std::to_string(s.end_token) + ") outside sentence of length " +
                           std::to_string(length));
    }
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const EntitySpan* a, const EntitySpan* b) { return a->start_token < b->start_token; });
  std::vector<NerTag> tags(length);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (k > 0 && sorted[k - 1]->overlaps(*sorted[k])) {
      throw OverlappingSpans("spans overlap at token " + std::to_string(sorted[k]->start_token));
    }
    const auto& s = *sorted[k];
    tags[s.start_token] = NerTag::begin(s.label);
    for (std::size_t i = s.start_token + 1; i < s.end_token; ++i) tags[i] = NerTag::inside(s.label);
  }
  return tags;
}

bool is_valid_bio2(std::span<const NerTag> tags) noexcept {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!tags[i].well_formed()) return false;
    if (tags[i].kind == TagKind::I &&
        (i == 0 || tags[i - 1].is_outside() || tags[i - 1].label != tags[i].label)) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> entity_labels(const Corpus& corpus) {
  std::set<std::string> labels;
  for (const auto& s : corpus.sentences) {
    if (!s.gold_tags) continue;
    for (const auto& t : *s.gold_tags) {
      if (!t.is_outside()) labels.insert(t.label);
    }
  }
  return {labels.begin(), labels.end()};
}

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto doc = ini::parse(text);
  Manifest m;
  for (const auto& section : doc.sections) {
    if (!section.name.empty() && section.name != "corpus") {
      throw ConfigError("manifest: unexpected section [" + section.name + "]");
    }
    section.require_known({"train", "validation", "test", "data", "ratios", "seed"});
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    if (auto v = section.get("train")) m.train = resolve(*v);
    if (auto v = section.get("validation")) m.validation = resolve(*v);
    if (auto v = section.get("test")) m.test = resolve(*v);
    if (auto v = section.get("data")) m.data = resolve(*v);
    if (auto v = section.get("seed")) m.seed = static_cast<std::uint64_t>(ini::to_integer("seed", *v));
    if (auto v = section.get("ratios")) {
      const auto parts = ini::split_list(*v);
      if (parts.size() != 3) throw ConfigError("manifest: ratios needs three values");
      for (std::size_t i = 0; i < 3; ++i) m.ratios[i] = ini::to_double("ratios", parts[i]);
    }
  }
  if (m.data && (m.train || m.validation || m.test)) {
    throw ConfigError("manifest: 'data' cannot be combined with pre-split files");
  }
  if (!m.data && !m.train && !m.test) {
    throw ConfigError("manifest names no corpus files");
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

}  // namespace textanon
