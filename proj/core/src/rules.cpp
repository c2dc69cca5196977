#include "textanon/rules.hpp"

#include "textanon/error.hpp"
#include "textanon/ini.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace textanon {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<int> numbers_in(std::string_view s, std::size_t max_digits) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    const auto start = i;
    int v = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) v = v * 10 + (s[i++] - '0');
    if (i - start > max_digits) return {};
    out.push_back(v);
  }
  return out;
}

bool credit_card_valid(std::string_view match) {
  std::string digits;
  for (char c : match) {
    if (c == ' ' || c == '-') continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    digits.push_back(c);
  }
  return digits.size() >= 12 && digits.size() <= 19 && luhn_valid(digits);
}

bool ipv4_valid(std::string_view match) {
  const auto parts = numbers_in(match, 3);
  return parts.size() == 4 && std::all_of(parts.begin(), parts.end(), [](int p) { return p <= 255; });
}

bool date_valid(std::string_view match) {
  const auto parts = numbers_in(match, 4);
  if (parts.size() != 3) return false;
  auto md = [](int month, int day) { return month >= 1 && month <= 12 && day >= 1 && day <= 31; };
  const std::size_t first_len = match.find_first_not_of("0123456789");
  if (first_len == 4) return md(parts[1], parts[2]);
  return md(parts[1], parts[0]) || md(parts[0], parts[1]);
}

bool phone_valid(std::string_view match) {
  const auto digits = std::count_if(match.begin(), match.end(), [](unsigned char c) { return std::isdigit(c); });
  return digits >= 7 && digits <= 15;
}

bool token_equal(std::string_view a, std::string_view b, bool case_sensitive) {
  if (case_sensitive) return a == b;
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

std::vector<RecognizerResult> match_phrases(const Sentence& tokens, const RecognizerRegistry::Compiled& r) {
  std::vector<RecognizerResult> out;
  const auto& spec = r.spec;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& phrase : spec.phrases) {
      if (phrase.empty() || i + phrase.size() > tokens.size()) continue;
      bool hit = true;
      for (std::size_t k = 0; k < phrase.size() && hit; ++k) {
        hit = token_equal(tokens.tokens[i + k].text, phrase[k], spec.case_sensitive);
      }
      if (!hit) continue;
      out.push_back({tokens.tokens[i].start_char, tokens.tokens[i + phrase.size() - 1].end_char(), spec.label,
                     spec.base_score, spec.name});
    }
  }
  return out;
}

std::vector<RecognizerResult> match_regex(std::string_view text, const RecognizerRegistry::Compiled& r) {
  std::vector<RecognizerResult> out;
  using Iter = std::regex_iterator<const char*>;
  for (Iter it(text.data(), text.data() + text.size(), r.regex), end; it != end; ++it) {
    const auto& m = *it;
    if (m.length(0) == 0) continue;
    const auto start = static_cast<std::size_t>(m.position(0));
    const auto len = static_cast<std::size_t>(m.length(0));
    if (r.validator && !r.validator(text.substr(start, len))) continue;
    out.push_back({start, start + len, r.spec.label, r.spec.base_score, r.spec.name});
  }
  return out;
}

bool context_hit(const Sentence& tokens, std::size_t char_start, std::size_t char_end, std::size_t window,
                 std::span<const std::string> words_lower) {
  if (window == 0 || words_lower.empty()) return false;
  auto matches = [&](const Token& t) {
    const auto lower = lowercase(t.text);
    return std::find(words_lower.begin(), words_lower.end(), lower) != words_lower.end();
  };
  std::size_t first_after = tokens.size();
  std::size_t before_end = 0;  // tokens [0, before_end) end at or before char_start
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens.tokens[i].end_char() <= char_start) before_end = i + 1;
    if (tokens.tokens[i].start_char >= char_end) {
      first_after = i;
      break;
    }
  }
  for (std::size_t k = 0; k < window && k < before_end; ++k) {
    if (matches(tokens.tokens[before_end - 1 - k])) return true;
  }
  for (std::size_t k = 0; k < window && first_after + k < tokens.size(); ++k) {
    if (matches(tokens.tokens[first_after + k])) return true;
  }
  return false;
}

// Higher score, then longer, then earlier; remaining keys make the order total.
bool higher_priority(const RecognizerResult& a, const RecognizerResult& b) {
  if (a.score != b.score) return a.score > b.score;
  const auto la = a.char_end - a.char_start;
  const auto lb = b.char_end - b.char_start;
  if (la != lb) return la > lb;
  if (a.char_start != b.char_start) return a.char_start < b.char_start;
  if (a.label != b.label) return a.label < b.label;
  return a.recognizer_name < b.recognizer_name;
}

PatternRecognizer make(std::string name, std::string label, std::string pattern, double score,
                       std::string validator, std::vector<std::string> context) {
  PatternRecognizer r;
  r.name = std::move(name);
  r.label = std::move(label);
  r.pattern = std::move(pattern);
  r.base_score = score;
  r.validator = std::move(validator);
  r.context_words = std::move(context);
  r.context_boost = kDefaultContextBoost;
  return r;
}

}  // namespace

bool luhn_valid(std::string_view digits) {
  if (digits.empty()) throw NotDigits("empty digit string");
  int sum = 0;
  bool doubled = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (*it < '0' || *it > '9') throw NotDigits("non-digit character in '" + std::string(digits) + "'");
    int d = *it - '0';
    if (doubled) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    doubled = !doubled;
  }
  return sum % 10 == 0;
}

Validator find_validator(std::string_view name) {
  if (name == "luhn") return credit_card_valid;
  if (name == "ipv4") return ipv4_valid;
  if (name == "date") return date_valid;
  if (name == "phone") return phone_valid;
  return nullptr;
}

RecognizerRegistry RecognizerRegistry::defaults() {
  RecognizerRegistry reg;
  // Bounded repetitions only; no nested unbounded quantifiers.
  reg.add(make("credit_card", "CREDIT_CARD", R"(\b\d(?:[ -]?\d){11,18}\b)", 0.5, "luhn",
               {"credit", "card", "visa", "mastercard", "amex", "debit", "cc"}));
  reg.add(make("email", "EMAIL", R"(\b[A-Za-z0-9._%+-]{1,64}@[A-Za-z0-9-]{1,63}(?:\.[A-Za-z0-9-]{1,63}){0,8}\.[A-Za-z]{2,24}\b)",
               0.65, "", {"email", "mail", "e-mail", "contact"}));
  reg.add(make("phone", "PHONE",
               R"((?:\+\d{1,3}[ .-]?)?(?:\(\d{1,4}\)[ .-]?)?\b\d{2,4}[ .-]\d{3,4}(?:[ .-]\d{2,4})?\b)", 0.4,
               "phone", {"phone", "tel", "call", "mobile", "cell", "fax", "telephone"}));
  reg.add(make("ipv4", "IPV4", R"(\b(?:\d{1,3}\.){3}\d{1,3}\b)", 0.6, "ipv4", {"ip", "address", "host", "server"}));
  reg.add(make("date", "DATE", R"(\b(?:\d{4}-\d{1,2}-\d{1,2}|\d{1,2}[/.-]\d{1,2}[/.-](?:\d{4}|\d{2}))\b)", 0.5,
               "date", {"date", "born", "dob", "birth", "birthday"}));
  return reg;
}

void RecognizerRegistry::add(PatternRecognizer recognizer) {
  const auto where = "recognizer '" + recognizer.name + "': ";
  if (recognizer.name.empty()) throw InvalidPattern("recognizer without a name");
  if (recognizer.label.empty()) throw InvalidPattern(where + "missing label");
  if (!(recognizer.base_score >= 0.0 && recognizer.base_score <= 1.0)) {
    throw InvalidPattern(where + "base score outside [0,1]");
  }
  if (!(recognizer.context_boost >= 0.0) || recognizer.base_score + recognizer.context_boost > 1.0 + 1e-12) {
    throw InvalidPattern(where + "base score plus context boost exceeds 1");
  }
  if (recognizer.pattern.empty() == recognizer.phrases.empty()) {
    throw InvalidPattern(where + "needs exactly one of a pattern or a phrase list");
  }

  auto compiled = std::make_shared<Compiled>();
  if (!recognizer.validator.empty()) {
    compiled->validator = find_validator(recognizer.validator);
    if (!compiled->validator) throw InvalidPattern(where + "unknown validator '" + recognizer.validator + "'");
  }
  if (!recognizer.pattern.empty()) {
    try {
      compiled->regex = std::regex(recognizer.pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw InvalidPattern(where + "does not compile: " + e.what());
    }
  }
  for (const auto& w : recognizer.context_words) compiled->context_lower.push_back(lowercase(w));
  compiled->spec = std::move(recognizer);

  for (auto& e : entries_) {
    if (e->spec.name == compiled->spec.name) {
      e = std::move(compiled);
      return;
    }
  }
  entries_.push_back(std::move(compiled));
}

const PatternRecognizer* RecognizerRegistry::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e->spec.name == name) return &e->spec;
  }
  return nullptr;
}

RecognizerRegistry RecognizerRegistry::parse(std::string_view text, const std::filesystem::path& base_dir) {
  const auto doc = ini::parse(text);
  bool include_defaults = true;
  if (const auto* top = doc.find("")) {
    top->require_known({"include_defaults"});
    if (auto v = top->get("include_defaults")) include_defaults = ini::to_bool("include_defaults", *v);
  }
  RecognizerRegistry reg = include_defaults ? defaults() : RecognizerRegistry{};

  constexpr std::string_view kPrefix = "recognizer.";
  for (const auto& section : doc.sections) {
    if (section.name.empty()) continue;
    if (!std::string_view(section.name).starts_with(kPrefix)) {
      throw InvalidPattern("registry: unexpected section [" + section.name + "]");
    }
    try {
      section.require_known(
          {"label", "pattern", "phrases", "phrases_file", "score", "validator", "context", "boost", "case_sensitive"});
    } catch (const ConfigError& e) {
      throw InvalidPattern(std::string("registry: ") + e.what());
    }
    PatternRecognizer r;
    r.name = section.name.substr(kPrefix.size());
    r.label = section.get("label").value_or("");
    r.pattern = section.get("pattern").value_or("");
    auto add_phrase = [&](std::string_view line) {
      const auto s = tokenize_raw(line);
      std::vector<std::string> words;
      for (const auto& t : s.tokens) words.push_back(t.text);
      if (!words.empty()) r.phrases.push_back(std::move(words));
    };
    if (auto v = section.get("phrases")) {
      for (const auto& p : ini::split_list(*v, '|')) add_phrase(p);
    }
    if (auto v = section.get("phrases_file")) {
      std::filesystem::path p(*v);
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p, std::ios::binary);
      if (!in) throw InvalidPattern("registry: cannot open phrase file '" + p.string() + "'");
      std::string line;
      while (std::getline(in, line)) add_phrase(line);
    }
    try {
      if (auto v = section.get("score")) r.base_score = ini::to_double("score", *v);
      if (auto v = section.get("boost")) r.context_boost = ini::to_double("boost", *v);
      if (auto v = section.get("case_sensitive")) r.case_sensitive = ini::to_bool("case_sensitive", *v);
    } catch (const ConfigError& e) {
      throw InvalidPattern(std::string("registry: ") + e.what());
    }
    r.validator = section.get("validator").value_or("");
    if (r.validator == "none") r.validator.clear();
    if (auto v = section.get("context")) r.context_words = ini::split_list(*v);
    reg.add(std::move(r));
  }
  return reg;
}

RecognizerRegistry RecognizerRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open registry '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

RecognizerResult context_enhance(RecognizerResult result, std::string_view text, std::size_t window_tokens,
                                 const PatternRecognizer& recognizer) {
  std::vector<std::string> lower;
  for (const auto& w : recognizer.context_words) lower.push_back(lowercase(w));
  const auto tokens = tokenize_raw(text);
  if (context_hit(tokens, result.char_start, result.char_end, window_tokens, lower)) {
    result.score = std::min(1.0, recognizer.base_score + recognizer.context_boost);
  }
  return result;
}

std::vector<RecognizerResult> rule_detect(std::string_view text, const RecognizerRegistry& registry,
                                          std::size_t window_tokens) {
  const auto tokens = tokenize_raw(text);
  std::vector<RecognizerResult> out;
  for (const auto& r : registry.compiled()) {
    auto found = r->spec.pattern.empty() ? match_phrases(tokens, *r) : match_regex(text, *r);
    for (auto& res : found) {
      if (context_hit(tokens, res.char_start, res.char_end, window_tokens, r->context_lower)) {
        res.score = std::min(1.0, r->spec.base_score + r->spec.context_boost);
      }
      out.push_back(std::move(res));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.char_start < b.char_start; });
  return out;
}

std::vector<RecognizerResult> resolve_overlaps(std::vector<RecognizerResult> results) {
  std::sort(results.begin(), results.end(), higher_priority);
  std::vector<RecognizerResult> kept;
  for (auto& r : results) {
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const RecognizerResult& k) {
      return r.char_start < k.char_end && k.char_start < r.char_end;
    });
    if (!clash) kept.push_back(std::move(r));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.char_start < b.char_start; });
  return kept;
}

std::optional<std::pair<std::size_t, std::size_t>> covering_tokens(const Sentence& sentence, std::size_t char_start,
                                                                   std::size_t char_end) {
  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto& t = sentence.tokens[i];
    if (t.end_char() > char_start && t.start_char < char_end) {
      if (!first) first = i;
      last = i + 1;
    }
  }
  if (!first) return std::nullopt;
  return std::make_pair(*first, last);
}

RulesDetector::RulesDetector(RecognizerRegistry registry, double score_threshold, std::size_t window_tokens,
                             std::string name)
    : registry_(std::move(registry)), threshold_(score_threshold), window_(window_tokens), name_(std::move(name)) {
  if (!(threshold_ >= 0.0 && threshold_ <= 1.0)) throw ConfigError("rules threshold must be in [0,1]");
}

std::vector<EntitySpan> RulesDetector::detect(const Sentence& sentence) const {
  if (sentence.empty()) return {};
  // Token-expanded results go through the same priority rule, so two char
  // results sharing a token cannot both survive.
  auto results = rule_detect(sentence.text, registry_, window_);
  std::erase_if(results, [&](const RecognizerResult& r) { return r.score < threshold_; });
  std::vector<RecognizerResult> expanded;
  for (const auto& r : resolve_overlaps(std::move(results))) {
    const auto cover = covering_tokens(sentence, r.char_start, r.char_end);
    if (!cover) continue;
    expanded.push_back({cover->first, cover->second, r.label, r.score, r.recognizer_name});
  }
  std::vector<EntitySpan> spans;
  for (const auto& r : resolve_overlaps(std::move(expanded))) {
    spans.push_back({r.char_start, r.char_end, r.label, r.score});
  }
  return spans;
}

}  // namespace textanon
