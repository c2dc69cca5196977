#include "textanon/linear_chain.hpp"

#include "textanon/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace textanon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum(exp(values))) with the maximum subtracted first.
double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

void check_dimensions(const Lattice& lattice, const TransitionScores& tr) {
  if (lattice.cols != tr.labels || tr.pair.size() != tr.labels * tr.labels ||
      tr.begin.size() != tr.labels || tr.end.size() != tr.labels) {
    throw LengthMismatch("lattice and transition dimensions disagree");
  }
}

// Forward log-scores alpha[t][y]: all prefixes ending in y at t.
Matrix forward(const Lattice& lat, const TransitionScores& tr) {
  const std::size_t n = lat.rows;
  const std::size_t L = lat.cols;
  Matrix alpha(n, L);
  std::vector<double> terms(L);
  for (std::size_t y = 0; y < L; ++y) alpha(0, y) = tr.begin[y] + lat(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t z = 0; z < L; ++z) {
      for (std::size_t y = 0; y < L; ++y) terms[y] = alpha(t - 1, y) + tr(y, z);
      alpha(t, z) = lat(t, z) + log_sum_exp(terms);
    }
  }
  return alpha;
}

// Backward log-scores beta[t][y]: all suffixes after t given y at t.
Matrix backward(const Lattice& lat, const TransitionScores& tr) {
  const std::size_t n = lat.rows;
  const std::size_t L = lat.cols;
  Matrix beta(n, L);
  std::vector<double> terms(L);
  for (std::size_t y = 0; y < L; ++y) beta(n - 1, y) = tr.end[y];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t z = 0; z < L; ++z) terms[z] = tr(y, z) + lat(t + 1, z) + beta(t + 1, z);
      beta(t, y) = log_sum_exp(terms);
    }
  }
  return beta;
}

}  // namespace

LabelSet::LabelSet(std::vector<NerTag> tags) : tags_(std::move(tags)) {
  bool has_outside = false;
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (!tags_[i].well_formed()) throw InvalidScheme("malformed tag in label set");
    if (!index_.emplace(tags_[i].str(), i).second) throw InvalidScheme("duplicate tag " + tags_[i].str());
    if (tags_[i].is_outside()) {
      outside_ = i;
      has_outside = true;
    }
  }
  if (!has_outside) throw InvalidScheme("label set lacks the O tag");
}

LabelSet LabelSet::from_entity_labels(std::span<const std::string> labels) {
  std::vector<NerTag> tags{NerTag::outside()};
  for (const auto& l : labels) {
    tags.push_back(NerTag::begin(l));
    tags.push_back(NerTag::inside(l));
  }
  return LabelSet(std::move(tags));
}

std::optional<std::size_t> LabelSet::index(const NerTag& tag) const {
  const auto it = index_.find(tag.str());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool LabelSet::allowed(std::size_t from, std::size_t to) const {
  const auto& t = tags_[to];
  if (t.kind != TagKind::I) return true;
  const auto& f = tags_[from];
  return !f.is_outside() && f.label == t.label;
}

bool LabelSet::allowed_start(std::size_t to) const { return tags_[to].kind != TagKind::I; }

TransitionScores ParameterLayout::transitions(std::span<const double> weights) const {
  TransitionScores tr;
  tr.labels = labels;
  tr.pair = weights.subspan(pair_offset(), labels * labels);
  tr.begin = weights.subspan(begin_offset(), labels);
  tr.end = weights.subspan(end_offset(), labels);
  return tr;
}

Lattice build_lattice(const FeatureSequence& features, const ParameterLayout& layout,
                      std::span<const double> weights) {
  const std::size_t L = layout.labels;
  Lattice lat(features.size(), L);
  for (std::size_t t = 0; t < features.size(); ++t) {
    double* row = lat.data.data() + t * L;
    for (const auto f : features.at(t)) {
      const double* w = weights.data() + layout.emission(f, 0);
      for (std::size_t y = 0; y < L; ++y) row[y] += w[y];
    }
  }
  return lat;
}

double score_path(const Lattice& lattice, const TransitionScores& tr, std::span<const std::size_t> tags) {
  check_dimensions(lattice, tr);
  if (tags.size() != lattice.rows) throw LengthMismatch("tag sequence length differs from lattice length");
  if (tags.empty()) return 0.0;
  double score = tr.begin[tags.front()] + tr.end[tags.back()];
  for (std::size_t t = 0; t < tags.size(); ++t) {
    score += lattice(t, tags[t]);
    if (t > 0) score += tr(tags[t - 1], tags[t]);
  }
  return score;
}

double log_partition(const Lattice& lattice, const TransitionScores& tr) {
  check_dimensions(lattice, tr);
  if (lattice.rows == 0) return 0.0;
  const auto alpha = forward(lattice, tr);
  std::vector<double> terms(tr.labels);
  for (std::size_t y = 0; y < tr.labels; ++y) terms[y] = alpha(lattice.rows - 1, y) + tr.end[y];
  return log_sum_exp(terms);
}

double log_partition_backward(const Lattice& lattice, const TransitionScores& tr) {
  check_dimensions(lattice, tr);
  if (lattice.rows == 0) return 0.0;
  const auto beta = backward(lattice, tr);
  std::vector<double> terms(tr.labels);
  for (std::size_t y = 0; y < tr.labels; ++y) terms[y] = tr.begin[y] + lattice(0, y) + beta(0, y);
  return log_sum_exp(terms);
}

Marginals marginals(const Lattice& lattice, const TransitionScores& tr) {
  check_dimensions(lattice, tr);
  const std::size_t n = lattice.rows;
  const std::size_t L = tr.labels;
  Marginals m;
  m.labels = L;
  m.node = Matrix(n, L);
  if (n == 0) return m;

  const auto alpha = forward(lattice, tr);
  const auto beta = backward(lattice, tr);
  std::vector<double> terms(L);
  for (std::size_t y = 0; y < L; ++y) terms[y] = alpha(n - 1, y) + tr.end[y];
  m.log_z = log_sum_exp(terms);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t y = 0; y < L; ++y) m.node(t, y) = std::exp(alpha(t, y) + beta(t, y) - m.log_z);
  }
  m.edge.assign(n > 0 ? (n - 1) * L * L : 0, 0.0);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t z = 0; z < L; ++z) {
        m.edge[(t * L + y) * L + z] =
            std::exp(alpha(t, y) + tr(y, z) + lattice(t + 1, z) + beta(t + 1, z) - m.log_z);
      }
    }
  }
  return m;
}

Decoded viterbi(const Lattice& lattice, const TransitionScores& tr, const LabelSet* constraints) {
  check_dimensions(lattice, tr);
  const std::size_t n = lattice.rows;
  const std::size_t L = tr.labels;
  Decoded out;
  if (n == 0) return out;
  if (constraints && constraints->size() != L) throw LengthMismatch("constraint label set size differs");

  // Best suffix scores run right to left so the forward walk can take the
  // smallest label index at every step, which yields the lexicographically
  // smallest optimal path.
  Matrix suffix(n, L);
  std::vector<std::size_t> next((n - 1) * L, 0);
  for (std::size_t y = 0; y < L; ++y) suffix(n - 1, y) = lattice(n - 1, y) + tr.end[y];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < L; ++y) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t z = 0; z < L; ++z) {
        if (constraints && !constraints->allowed(y, z)) continue;
        const double s = tr(y, z) + suffix(t + 1, z);
        if (s > best) {
          best = s;
          arg = z;
        }
      }
      suffix(t, y) = lattice(t, y) + best;
      next[t * L + y] = arg;
    }
  }

  double best = kNegInf;
  std::size_t first = 0;
  for (std::size_t y = 0; y < L; ++y) {
    if (constraints && !constraints->allowed_start(y)) continue;
    const double s = tr.begin[y] + suffix(0, y);
    if (s > best) {
      best = s;
      first = y;
    }
  }
  out.path.resize(n);
  out.path[0] = first;
  for (std::size_t t = 1; t < n; ++t) out.path[t] = next[(t - 1) * L + out.path[t - 1]];
  out.score = best;
  return out;
}

std::vector<TrainingInstance> make_instances(const Corpus& corpus, const FeatureExtractor& extractor,
                                             const FeatureIndex& index, const LabelSet& labels) {
  std::vector<TrainingInstance> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences) {
    if (!s.gold_tags || s.empty()) continue;
    TrainingInstance inst;
    inst.gold.reserve(s.size());
    for (const auto& tag : *s.gold_tags) {
      const auto id = labels.index(tag);
      if (!id) throw UnknownLabel("tag " + tag.str() + " is not in the model's label set");
      inst.gold.push_back(*id);
    }
    inst.features = featurize(s, extractor, index);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<NerTag> LinearChainModel::decode(const Sentence& sentence, const FeatureExtractor& extractor) const {
  if (sentence.empty()) return {};
  const auto lat = lattice(featurize(sentence, extractor, features));
  return to_tags(labels, viterbi(lat, transitions(), &labels).path);
}

std::vector<NerTag> to_tags(const LabelSet& labels, std::span<const std::size_t> path) {
  std::vector<NerTag> out;
  out.reserve(path.size());
  for (auto i : path) out.push_back(labels.tag(i));
  return out;
}

}  // namespace textanon
