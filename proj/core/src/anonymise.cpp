#include "textanon/anonymise.hpp"

#include "textanon/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace textanon {

namespace {

// Fictional names and reserved documentation ranges only.
const std::map<std::string, std::vector<std::string>, std::less<>>& bundled_entries() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> entries = {
      {"PER",
       {"Peter Green", "Maria Lopez", "Anna Novak", "David Chen", "Laura Rossi", "James Walker", "Sofia Berg",
        "Omar Haddad", "Elena Petrova", "Thomas Keller", "Grace Okafor", "Lucas Moreau"}},
      {"ORG",
       {"NatWest Bank", "Acme Holdings", "Northwind Traders", "Globex Corporation", "Initech", "Blue Harbor Group",
        "Summit Analytics", "Redwood Partners", "Vandelay Industries", "Oceanic Systems"}},
      {"LOC",
       {"Springfield", "Riverton", "Lakeside", "Port Ellis", "Northdale", "Eastbrook", "Millford", "Stonebridge",
        "Westhaven", "Fairview"}},
      {"MISC",
       {"Freedonian", "Euroland Cup", "Vortex Festival", "Atlantean", "Borealis Prize", "Silverline Series",
        "Zentrian", "Aurora Open"}},
      {"EMAIL", {"alex@example.org", "sam@example.net", "jordan@example.com", "casey@example.org"}},
      {"PHONE", {"555-0100", "555-0142", "555-0177", "555-0199"}},
      {"CREDIT_CARD", {"4111 1111 1111 1111", "5500 0000 0000 0004", "3400 0000 0000 009", "6011 0000 0000 0004"}},
      {"IPV4", {"192.0.2.10", "198.51.100.7", "203.0.113.25", "192.0.2.200"}},
      {"DATE", {"01/01/2000", "15/06/1999", "2001-03-04", "30/11/2010"}},
  };
  return entries;
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::uint64_t hash, std::string_view bytes) {
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string replacement_for(const Strategy& strategy, const std::string& label, const std::string& surface) {
  return std::visit(
      [&](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Removal>) {
          return s.placeholder;
        } else if constexpr (std::is_same_v<S, Categorisation>) {
          const auto it = s.placeholders.find(label);
          if (it == s.placeholders.end()) throw UnknownLabel("no placeholder configured for label '" + label + "'");
          return "<" + it->second + ">";
        } else {
          return pseudonym_for(label, surface, s.seed, s.dictionaries);
        }
      },
      strategy);
}

void check_replacements(const AnonymisationPlan& p) {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < p.replacements.size(); ++i) {
    const auto& r = p.replacements[i];
    if (r.char_start > r.char_end || r.char_end > p.text.size()) {
      throw LengthMismatch("replacement " + std::to_string(i) + " is outside the text");
    }
    if (i > 0 && r.char_start < prev_end) throw OverlappingSpans("replacements overlap or are unsorted");
    prev_end = r.char_end;
  }
}

}  // namespace

Dictionaries Dictionaries::bundled() {
  Dictionaries d;
  for (const auto& [label, list] : bundled_entries()) d.set(label, list);
  return d;
}

void Dictionaries::set(const std::string& label, std::vector<std::string> entries) {
  entries_[label] = std::move(entries);
}

void Dictionaries::load(const std::string& label, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open dictionary '" + path.string() + "'");
  std::vector<std::string> list;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) list.push_back(line);
  }
  if (list.empty()) throw LoadError("dictionary '" + path.string() + "' is empty");
  set(label, std::move(list));
}

const std::vector<std::string>* Dictionaries::find(std::string_view label) const {
  const auto it = entries_.find(label);
  return it == entries_.end() || it->second.empty() ? nullptr : &it->second;
}

std::map<std::string, std::string, std::less<>> Categorisation::default_placeholders() {
  return {{"PER", "PERSON"},  {"LOC", "LOCATION"}, {"ORG", "ORG"},   {"MISC", "MISC"},
          {"EMAIL", "EMAIL"}, {"PHONE", "PHONE"},  {"IPV4", "IPV4"}, {"CREDIT_CARD", "CREDIT_CARD"},
          {"DATE", "DATE"}};
}

std::string pseudonym_for(std::string_view label, std::string_view surface, std::uint64_t seed,
                          const Dictionaries& dictionaries) {
  const auto* list = dictionaries.find(label);
  if (!list) throw NoDictionaryForLabel("no pseudonym dictionary for label '" + std::string(label) + "'");

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    const char byte = static_cast<char>((seed >> (8 * i)) & 0xff);
    h = fnv1a(h, std::string_view(&byte, 1));
  }
  h = fnv1a(h, surface);

  const std::size_t n = list->size();
  const std::size_t first = static_cast<std::size_t>(h % n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& candidate = (*list)[(first + k) % n];
    if (candidate != surface) return candidate;
  }
  throw NoDictionaryForLabel("dictionary for label '" + std::string(label) +
                             "' has no entry different from the original");
}

AnonymisationPlan plan(const Sentence& sentence, std::span<const EntitySpan> spans, const Strategy& strategy) {
  std::vector<EntitySpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start_token < b.start_token; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i];
    if (s.start_token >= s.end_token || s.end_token > sentence.tokens.size()) {
      throw LengthMismatch("span [" + std::to_string(s.start_token) + ", " + std::to_string(s.end_token) +
                           ") is outside a sentence of " + std::to_string(sentence.tokens.size()) + " tokens");
    }
    if (i > 0 && sorted[i - 1].overlaps(s)) throw OverlappingSpans("spans overlap; resolve them before anonymising");
  }

  AnonymisationPlan p;
  p.text = sentence.text;
  for (const auto& s : sorted) {
    Replacement r;
    r.char_start = sentence.tokens[s.start_token].start_char;
    r.char_end = sentence.tokens[s.end_token - 1].end_char();
    r.label = s.label;
    r.original = sentence.text.substr(r.char_start, r.char_end - r.char_start);
    r.replacement = replacement_for(strategy, r.label, r.original);
    p.replacements.push_back(std::move(r));
  }
  return p;
}

AnonymisationPlan plan_text(std::string_view text, const Detector& detector, const Strategy& strategy) {
  AnonymisationPlan out;
  out.text = std::string(text);
  std::size_t offset = 0;
  while (offset <= text.size()) {
    const auto nl = text.find('\n', offset);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    const auto line = text.substr(offset, end - offset);
    const auto sentence = tokenize_raw(line);
    if (!sentence.tokens.empty()) {
      const auto spans = detector.detect(sentence);
      auto line_plan = plan(sentence, spans, strategy);
      for (auto& r : line_plan.replacements) {
        r.char_start += offset;
        r.char_end += offset;
        out.replacements.push_back(std::move(r));
      }
    }
    if (nl == std::string_view::npos) break;
    offset = nl + 1;
  }
  return out;
}

AnonymisationPlan plan_corpus(const Corpus& corpus, const Detector& detector, const Strategy& strategy) {
  AnonymisationPlan out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& sentence = corpus.sentences[i];
    if (i > 0) out.text.push_back('\n');
    const std::size_t offset = out.text.size();
    out.text += sentence.text;
    const auto spans = detector.detect(sentence);
    auto sentence_plan = plan(sentence, spans, strategy);
    for (auto& r : sentence_plan.replacements) {
      r.char_start += offset;
      r.char_end += offset;
      out.replacements.push_back(std::move(r));
    }
  }
  return out;
}

AnonymisedDocument apply(const AnonymisationPlan& p) {
  check_replacements(p);
  AnonymisedDocument doc;
  doc.text = p.text;
  // Right to left, so the recorded original offsets stay valid while editing.
  for (auto it = p.replacements.rbegin(); it != p.replacements.rend(); ++it) {
    doc.text.replace(it->char_start, it->char_end - it->char_start, it->replacement);
  }
  std::ptrdiff_t shift = 0;
  for (const auto& r : p.replacements) {
    AuditEntry e;
    e.original = p.text.substr(r.char_start, r.char_end - r.char_start);
    e.replacement = r.replacement;
    e.label = r.label;
    e.original_start = r.char_start;
    e.original_end = r.char_end;
    e.new_start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.char_start) + shift);
    e.new_end = e.new_start + r.replacement.size();
    shift += static_cast<std::ptrdiff_t>(r.replacement.size()) -
             static_cast<std::ptrdiff_t>(r.char_end - r.char_start);
    doc.audit.push_back(std::move(e));
  }
  return doc;
}

std::string restore(std::string_view anonymised_text, std::span<const AuditEntry> audit) {
  std::string text(anonymised_text);
  for (auto it = audit.rbegin(); it != audit.rend(); ++it) {
    if (it->new_end < it->new_start || it->new_end > text.size() ||
        text.compare(it->new_start, it->new_end - it->new_start, it->replacement) != 0) {
      throw Error("audit entry at offset " + std::to_string(it->new_start) + " does not match the text");
    }
    text.replace(it->new_start, it->new_end - it->new_start, it->original);
  }
  return text;
}

void write_audit(std::ostream& out, std::span<const AuditEntry> audit) {
  for (const auto& e : audit) {
    const nlohmann::ordered_json j = {
        {"label", e.label},
        {"original", e.original},
        {"replacement", e.replacement},
        {"original_start", e.original_start},
        {"original_end", e.original_end},
        {"new_start", e.new_start},
        {"new_end", e.new_end},
    };
    out << j.dump() << '\n';
  }
}

std::vector<AuditEntry> read_audit(std::istream& in) {
  std::vector<AuditEntry> audit;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AuditEntry e;
      e.label = j.at("label").get<std::string>();
      e.original = j.at("original").get<std::string>();
      e.replacement = j.at("replacement").get<std::string>();
      e.original_start = j.at("original_start").get<std::size_t>();
      e.original_end = j.at("original_end").get<std::size_t>();
      e.new_start = j.at("new_start").get<std::size_t>();
      e.new_end = j.at("new_end").get<std::size_t>();
      audit.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw LoadError("audit line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return audit;
}

}  // namespace textanon
