#include "textanon/features.hpp"

#include "textanon/error.hpp"
#include "textanon/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace textanon {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string offset_name(std::string_view prefix, int offset) {
  std::string out(prefix);
  if (offset > 0) out.push_back('+');
  out += std::to_string(offset);
  out.push_back('=');
  return out;
}

bool all_digits(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool is_title(std::string_view w) {
  if (w.empty() || !std::isupper(static_cast<unsigned char>(w[0]))) return false;
  return std::none_of(w.begin() + 1, w.end(), [](unsigned char c) { return std::isupper(c); });
}

bool is_upper(std::string_view w) {
  bool letter = false;
  for (unsigned char c : w) {
    if (std::islower(c)) return false;
    letter = letter || std::isupper(c);
  }
  return letter;
}

constexpr std::string_view kBos = "<BOS>";
constexpr std::string_view kEos = "<EOS>";

}  // namespace

std::string word_shape(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (unsigned char c : word) {
    if (std::isupper(c)) {
      out.push_back('X');
    } else if (std::islower(c) || c >= 0x80) {
      out.push_back('x');
    } else if (std::isdigit(c)) {
      out.push_back('d');
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

std::string short_shape(std::string_view word) {
  const auto full = word_shape(word);
  std::string out;
  for (char c : full) {
    if (out.empty() || out.back() != c) out.push_back(c);
  }
  return out;
}

void Gazetteer::add(const std::string& label, std::span<const std::string> phrase_tokens) {
  if (phrase_tokens.empty()) return;
  std::vector<std::string> lowered;
  lowered.reserve(phrase_tokens.size());
  for (const auto& t : phrase_tokens) lowered.push_back(lowercase(t));
  auto first = lowered.front();
  phrases_.emplace(std::move(first), std::make_pair(label, std::move(lowered)));
}

void Gazetteer::load(const std::string& label, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open gazetteer '" + path.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    const auto sentence = tokenize_raw(line);
    std::vector<std::string> words;
    for (const auto& t : sentence.tokens) words.push_back(t.text);
    add(label, words);
  }
}

std::vector<std::vector<std::string>> Gazetteer::mark(const Sentence& sentence) const {
  std::vector<std::vector<std::string>> marks(sentence.size());
  std::vector<std::string> lowered;
  lowered.reserve(sentence.size());
  for (const auto& t : sentence.tokens) lowered.push_back(lowercase(t.text));
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    const auto [lo, hi] = phrases_.equal_range(lowered[i]);
    for (auto it = lo; it != hi; ++it) {
      const auto& [label, words] = it->second;
      if (i + words.size() > lowered.size()) continue;
      if (!std::equal(words.begin(), words.end(), lowered.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      marks[i].push_back("B-" + label);
      for (std::size_t k = 1; k < words.size(); ++k) marks[i + k].push_back("I-" + label);
    }
  }
  for (auto& m : marks) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
  }
  return marks;
}

FeatureExtractor::FeatureExtractor(FeatureConfig config, const Gazetteer* gazetteer)
    : config_(config), gazetteer_(gazetteer && !gazetteer->empty() ? gazetteer : nullptr) {}

std::vector<std::string> FeatureExtractor::extract(const Sentence& sentence, std::size_t position) const {
  std::vector<std::string> out;
  if (gazetteer_) {
    const auto marks = gazetteer_->mark(sentence);
    append(sentence, position, &marks[position], out);
  } else {
    append(sentence, position, nullptr, out);
  }
  return out;
}

std::vector<std::vector<std::string>> FeatureExtractor::extract_all(const Sentence& sentence) const {
  std::vector<std::vector<std::string>> out(sentence.size());
  std::vector<std::vector<std::string>> marks;
  if (gazetteer_) marks = gazetteer_->mark(sentence);
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    append(sentence, i, gazetteer_ ? &marks[i] : nullptr, out[i]);
  }
  return out;
}

void FeatureExtractor::append(const Sentence& sentence, std::size_t position,
                              const std::vector<std::string>* marks,
                              std::vector<std::string>& out) const {
  const auto n = static_cast<long>(sentence.size());
  const auto pos = static_cast<long>(position);
  const auto word_at = [&](long i) -> std::string {
    if (i < 0) return std::string(kBos);
    if (i >= n) return std::string(kEos);
    return lowercase(sentence.tokens[static_cast<std::size_t>(i)].text);
  };
  const std::string_view word = sentence.tokens[position].text;
  const std::string lower = lowercase(word);

  out.emplace_back("bias");
  for (int k = -config_.window; k <= config_.window; ++k) {
    out.push_back(offset_name("w", k) + (k == 0 ? lower : word_at(pos + k)));
  }

  const int shape_reach = config_.context_shapes ? 1 : 0;
  for (int k = -shape_reach; k <= shape_reach; ++k) {
    const long i = pos + k;
    std::string shape;
    if (i < 0) {
      shape = kBos;
    } else if (i >= n) {
      shape = kEos;
    } else {
      shape = word_shape(sentence.tokens[static_cast<std::size_t>(i)].text);
    }
    out.push_back(offset_name("shape", k) + shape);
  }
  out.push_back("sshape0=" + short_shape(word));

  for (std::size_t len = 1; len <= config_.max_affix && len <= lower.size(); ++len) {
    out.push_back("p" + std::to_string(len) + "=" + lower.substr(0, len));
    out.push_back("s" + std::to_string(len) + "=" + lower.substr(lower.size() - len));
  }

  if (all_digits(word)) out.emplace_back("is_digit");
  if (is_title(word)) out.emplace_back("is_title");
  if (is_upper(word)) out.emplace_back("is_upper");
  if (std::any_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); })) {
    out.emplace_back("has_digit");
  }
  if (word.find('-') != std::string_view::npos) out.emplace_back("has_hyphen");

  if (config_.use_pos && sentence.tokens[position].pos()) {
    for (int k = -1; k <= 1; ++k) {
      const long i = pos + k;
      std::string tag;
      if (i < 0) {
        tag = kBos;
      } else if (i >= n) {
        tag = kEos;
      } else {
        tag = std::string(sentence.tokens[static_cast<std::size_t>(i)].pos().value_or(""));
      }
      out.push_back(offset_name("pos", k) + tag);
    }
  }
  if (config_.use_chunk) {
    if (const auto chunk = sentence.tokens[position].chunk()) out.push_back("chunk0=" + std::string(*chunk));
  }

  if (position == 0) out.emplace_back("BOS");
  if (pos == n - 1) out.emplace_back("EOS");

  if (marks) {
    for (const auto& m : *marks) out.push_back("gaz=" + m);
  }
}

std::optional<std::uint32_t> FeatureIndex::find(std::string_view feature) const {
  const auto it = ids_.find(feature);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> FeatureIndex::add(std::string_view feature) {
  if (auto id = find(feature)) return id;
  if (frozen_) return std::nullopt;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(feature);
  ids_.emplace(names_.back(), id);
  return id;
}

namespace {

using CountMap = std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>;

FeatureIndex index_from_counts(CountMap counts, std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [name, n] : counts) {
    if (n >= std::max<std::size_t>(min_count, 1)) kept.emplace_back(name, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  FeatureIndex index;
  for (const auto& [name, n] : kept) index.add(name);
  index.freeze();
  return index;
}

}  // namespace

FeatureIndex index_features(std::span<const std::vector<std::string>> position_lists,
                            std::size_t min_count) {
  CountMap counts;
  for (const auto& list : position_lists) {
    for (const auto& f : list) {
      auto it = counts.find(f);
      if (it == counts.end()) {
        counts.emplace(f, 1);
      } else {
        ++it->second;
      }
    }
  }
  return index_from_counts(std::move(counts), min_count);
}

FeatureIndex index_corpus_features(const Corpus& corpus, const FeatureExtractor& extractor,
                                   std::size_t min_count) {
  CountMap counts;
  for (const auto& s : corpus.sentences) {
    for (auto& list : extractor.extract_all(s)) {
      for (auto& f : list) {
        auto it = counts.find(f);
        if (it == counts.end()) {
          counts.emplace(std::move(f), 1);
        } else {
          ++it->second;
        }
      }
    }
  }
  return index_from_counts(std::move(counts), min_count);
}

void FeatureSequence::push_position(std::span<const std::uint32_t> ids) {
  ids_.insert(ids_.end(), ids.begin(), ids.end());
  offsets_.push_back(static_cast<std::uint32_t>(ids_.size()));
}

FeatureSequence featurize(const Sentence& sentence, const FeatureExtractor& extractor,
                          const FeatureIndex& index) {
  FeatureSequence seq;
  std::vector<std::uint32_t> ids;
  for (const auto& list : extractor.extract_all(sentence)) {
    ids.clear();
    for (const auto& f : list) {
      if (auto id = index.find(f)) ids.push_back(*id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    seq.push_position(ids);
  }
  return seq;
}

}  // namespace textanon
