#pragma once

#include "textanon/linear_chain.hpp"
#include "textanon/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace textanon {

enum class Optimizer { Lbfgs, Adagrad };

struct CrfConfig {
  double l2 = 1.0;
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  Optimizer optimizer = Optimizer::Lbfgs;
  std::size_t lbfgs_history = 10;
  /// Gradient workers. Results are bit-stable for a fixed value.
  std::size_t threads = 1;

  // AdaGrad mini-batch settings.
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  std::uint64_t seed = 13;

  std::size_t feature_min_count = 1;
  FeatureConfig features;
};

struct TrainingMeta {
  std::size_t iterations = 0;
  double final_objective = 0.0;
  bool converged = false;
  std::string status;
  /// Initial objective followed by one value per iteration (or epoch).
  std::vector<double> trace;
};

struct CrfModel {
  LinearChainModel chain;
  double l2 = 1.0;
  TrainingMeta meta;
};

/// Sum over instances of (log Z - gold path score) plus (l2 / 2) * |w|^2.
/// `grad` receives expected minus empirical feature counts plus l2 * w.
double nll_and_gradient(std::span<const TrainingInstance> batch, const ParameterLayout& layout,
                        std::span<const double> weights, double l2, std::span<double> grad,
                        std::size_t threads = 1);

double nll_and_gradient(std::span<const TrainingInstance* const> batch, const ParameterLayout& layout,
                        std::span<const double> weights, double l2, std::span<double> grad,
                        std::size_t threads = 1);

/// Regularized maximum likelihood. Throws NoTrainingData on an empty corpus.
CrfModel train_crf(const Corpus& corpus, const CrfConfig& config = {},
                   const Gazetteer* gazetteer = nullptr);

/// Constrained Viterbi over the model's label set.
Decoded viterbi_decode(const Sentence& sentence, const CrfModel& model,
                       const FeatureExtractor& extractor);

class CrfDetector final : public Detector {
 public:
  explicit CrfDetector(CrfModel model, std::string name = "CRF", const Gazetteer* gazetteer = nullptr);

  std::string name() const override { return name_; }
  /// Decoded spans; each score is the mean marginal of the decoded tag over the span.
  std::vector<EntitySpan> detect(const Sentence& sentence) const override;

  const CrfModel& model() const noexcept { return model_; }
  const FeatureExtractor& extractor() const noexcept { return extractor_; }

 private:
  CrfModel model_;
  std::string name_;
  FeatureExtractor extractor_;
};

}  // namespace textanon
