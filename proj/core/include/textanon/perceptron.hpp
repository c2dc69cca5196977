#pragma once

#include "textanon/linear_chain.hpp"
#include "textanon/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace textanon {

struct PerceptronConfig {
  std::size_t epochs = 10;
  std::uint64_t shuffle_seed = 13;
  std::size_t feature_min_count = 1;
  FeatureConfig features;
  /// Called after every sentence visit with the current (non-averaged) weights.
  std::function<void(std::span<const double>)> step_observer;
};

struct PerceptronMeta {
  std::size_t epochs = 0;
  /// Sentence visits; the served weights average this many snapshots.
  std::size_t steps = 0;
  std::size_t updates = 0;
  std::vector<std::size_t> mistakes_per_epoch;
};

struct PerceptronModel {
  LinearChainModel chain;
  PerceptronMeta meta;
};

/// Mistake-driven structured perceptron. The served weights are the mean of the
/// weight vector after each sentence visit, maintained lazily with per-weight
/// timestamps.
PerceptronModel train_perceptron(const Corpus& corpus, const PerceptronConfig& config = {},
                                 const Gazetteer* gazetteer = nullptr);

class PerceptronDetector final : public Detector {
 public:
  explicit PerceptronDetector(PerceptronModel model, std::string name = "Perceptron",
                              const Gazetteer* gazetteer = nullptr);

  std::string name() const override { return name_; }
  /// Constrained Viterbi spans, each scored 1.0.
  std::vector<EntitySpan> detect(const Sentence& sentence) const override;

  const PerceptronModel& model() const noexcept { return model_; }

 private:
  PerceptronModel model_;
  std::string name_;
  FeatureExtractor extractor_;
};

}  // namespace textanon
