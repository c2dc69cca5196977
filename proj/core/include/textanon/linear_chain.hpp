#pragma once

#include "textanon/corpus.hpp"
#include "textanon/features.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace textanon {

/// Ordered BIO2 tag inventory.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<NerTag> tags);
  /// O, then B-X and I-X for each entity label in the given order.
  static LabelSet from_entity_labels(std::span<const std::string> labels);

  std::size_t size() const noexcept { return tags_.size(); }
  const NerTag& tag(std::size_t index) const { return tags_.at(index); }
  const std::vector<NerTag>& tags() const noexcept { return tags_; }
  std::optional<std::size_t> index(const NerTag& tag) const;
  /// Index of the O tag; every label set contains it.
  std::size_t outside() const noexcept { return outside_; }

  /// BIO2 structure: I-X may only follow B-X or I-X.
  bool allowed(std::size_t from, std::size_t to) const;
  bool allowed_start(std::size_t to) const;

 private:
  std::vector<NerTag> tags_;
  std::map<std::string, std::size_t> index_;
  std::size_t outside_ = 0;
};

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double value = 0.0) : rows(r), cols(c), data(r * c, value) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Per-position unnormalized log-scores, positions x labels.
using Lattice = Matrix;

/// Non-owning view of transition log-scores.
struct TransitionScores {
  std::size_t labels = 0;
  std::span<const double> pair;   // from * labels + to
  std::span<const double> begin;  // score of starting in a label
  std::span<const double> end;    // score of ending in a label

  double operator()(std::size_t from, std::size_t to) const { return pair[from * labels + to]; }
};

/// Flat parameter vector layout: emission [feature x label], then the
/// label x label transition matrix, then begin and end vectors.
struct ParameterLayout {
  std::size_t features = 0;
  std::size_t labels = 0;

  std::size_t emission(std::size_t feature, std::size_t label) const noexcept { return feature * labels + label; }
  std::size_t pair_offset() const noexcept { return features * labels; }
  std::size_t pair(std::size_t from, std::size_t to) const noexcept { return pair_offset() + from * labels + to; }
  std::size_t begin_offset() const noexcept { return pair_offset() + labels * labels; }
  std::size_t end_offset() const noexcept { return begin_offset() + labels; }
  std::size_t size() const noexcept { return end_offset() + labels; }

  TransitionScores transitions(std::span<const double> weights) const;
};

/// Lattice of emission scores for featurized positions.
Lattice build_lattice(const FeatureSequence& features, const ParameterLayout& layout,
                      std::span<const double> weights);

/// Emission plus transition scores along `tags`, including begin and end.
double score_path(const Lattice& lattice, const TransitionScores& transitions,
                  std::span<const std::size_t> tags);

/// log Z by the forward recursion.
double log_partition(const Lattice& lattice, const TransitionScores& transitions);
/// log Z by the backward recursion.
double log_partition_backward(const Lattice& lattice, const TransitionScores& transitions);

struct Marginals {
  double log_z = 0.0;
  Matrix node;               // positions x labels
  std::vector<double> edge;  // (positions - 1) x labels x labels
  std::size_t labels = 0;

  double edge_at(std::size_t t, std::size_t from, std::size_t to) const {
    return edge[(t * labels + from) * labels + to];
  }
};

Marginals marginals(const Lattice& lattice, const TransitionScores& transitions);

struct Decoded {
  std::vector<std::size_t> path;
  double score = 0.0;
};

/// Highest-scoring path; among exact ties the lexicographically smallest
/// label-index path wins. With `constraints`, transitions that break BIO2
/// are excluded.
Decoded viterbi(const Lattice& lattice, const TransitionScores& transitions,
                const LabelSet* constraints = nullptr);

struct TrainingInstance {
  FeatureSequence features;
  std::vector<std::size_t> gold;
};

/// Featurizes every gold-tagged sentence. Throws UnknownLabel for tags outside `labels`.
std::vector<TrainingInstance> make_instances(const Corpus& corpus, const FeatureExtractor& extractor,
                                             const FeatureIndex& index, const LabelSet& labels);

/// State shared by the CRF and the perceptron: labels, features, weights.
struct LinearChainModel {
  LabelSet labels;
  FeatureConfig feature_config;
  FeatureIndex features;
  std::vector<double> weights;

  ParameterLayout layout() const noexcept { return {features.size(), labels.size()}; }
  TransitionScores transitions() const { return layout().transitions(weights); }
  Lattice lattice(const FeatureSequence& seq) const { return build_lattice(seq, layout(), weights); }
  /// Viterbi under BIO2 constraints, returned as tags.
  std::vector<NerTag> decode(const Sentence& sentence, const FeatureExtractor& extractor) const;
};

std::vector<NerTag> to_tags(const LabelSet& labels, std::span<const std::size_t> path);

}  // namespace textanon
