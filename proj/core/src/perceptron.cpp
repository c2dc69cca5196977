#include "textanon/perceptron.hpp"

#include "textanon/error.hpp"

#include <algorithm>
#include <random>

namespace textanon {

namespace {

class AveragedWeights {
 public:
  explicit AveragedWeights(std::size_t size) : current_(size, 0.0), total_(size, 0.0), stamp_(size, 0) {}

  std::span<const double> current() const noexcept { return current_; }

  // Applied during `step` (1-based), before that step's snapshot.
  void add(std::size_t index, double delta, std::size_t step) {
    total_[index] += static_cast<double>(step - 1 - stamp_[index]) * current_[index];
    stamp_[index] = step - 1;
    current_[index] += delta;
  }

  std::vector<double> average(std::size_t steps) const {
    std::vector<double> out(current_.size(), 0.0);
    if (steps == 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double total = total_[i] + static_cast<double>(steps - stamp_[i]) * current_[i];
      out[i] = total / static_cast<double>(steps);
    }
    return out;
  }

 private:
  std::vector<double> current_;
  std::vector<double> total_;
  std::vector<std::size_t> stamp_;
};

void apply_path(AveragedWeights& w, const ParameterLayout& layout, const TrainingInstance& inst,
                std::span<const std::size_t> path, double sign, std::span<const std::size_t> other,
                std::size_t step) {
  const std::size_t n = path.size();
  for (std::size_t t = 0; t < n; ++t) {
    if (path[t] == other[t]) continue;  // identical emissions cancel
    for (const auto f : inst.features.at(t)) w.add(layout.emission(f, path[t]), sign, step);
  }
  for (std::size_t t = 0; t + 1 < n; ++t) w.add(layout.pair(path[t], path[t + 1]), sign, step);
  w.add(layout.begin_offset() + path.front(), sign, step);
  w.add(layout.end_offset() + path.back(), sign, step);
}

}  // namespace

PerceptronModel train_perceptron(const Corpus& corpus, const PerceptronConfig& config,
                                 const Gazetteer* gazetteer) {
  const bool any_gold = std::any_of(corpus.sentences.begin(), corpus.sentences.end(),
                                    [](const Sentence& s) { return s.gold_tags && !s.empty(); });
  if (!any_gold) throw NoTrainingData("training corpus has no gold-tagged sentences");

  PerceptronModel model;
  auto& chain = model.chain;
  const auto labels = entity_labels(corpus);
  chain.labels = LabelSet::from_entity_labels(labels);
  chain.feature_config = config.features;
  const FeatureExtractor extractor(config.features, gazetteer);
  chain.features = index_corpus_features(corpus, extractor, config.feature_min_count);
  const auto layout = chain.layout();
  const auto instances = make_instances(corpus, extractor, chain.features, chain.labels);

  AveragedWeights weights(layout.size());
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.shuffle_seed);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    std::size_t mistakes = 0;
    for (const auto idx : order) {
      ++step;
      const auto& inst = instances[idx];
      const auto lattice = build_lattice(inst.features, layout, weights.current());
      const auto predicted = viterbi(lattice, layout.transitions(weights.current()), &chain.labels).path;
      if (predicted != inst.gold) {
        ++mistakes;
        ++model.meta.updates;
        apply_path(weights, layout, inst, inst.gold, +1.0, predicted, step);
        apply_path(weights, layout, inst, predicted, -1.0, inst.gold, step);
      }
      if (config.step_observer) config.step_observer(weights.current());
    }
    model.meta.mistakes_per_epoch.push_back(mistakes);
    model.meta.epochs = epoch + 1;
  }
  model.meta.steps = step;
  chain.weights = weights.average(step);
  return model;
}

PerceptronDetector::PerceptronDetector(PerceptronModel model, std::string name, const Gazetteer* gazetteer)
    : model_(std::move(model)), name_(std::move(name)), extractor_(model_.chain.feature_config, gazetteer) {}

std::vector<EntitySpan> PerceptronDetector::detect(const Sentence& sentence) const {
  auto spans = spans_from_tags(model_.chain.decode(sentence, extractor_), Validation::Lenient);
  for (auto& s : spans) s.score = 1.0;
  return spans;
}

}  // namespace textanon
