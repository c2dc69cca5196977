#include "textanon/crf.hpp"

#include "textanon/error.hpp"
#include "textanon/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace textanon {

namespace {

// Adds one instance's contribution to `grad` and returns its negative log-likelihood.
double accumulate_instance(const TrainingInstance& inst, const ParameterLayout& layout,
                           std::span<const double> weights, std::span<double> grad) {
  const std::size_t L = layout.labels;
  const std::size_t n = inst.gold.size();
  if (n == 0) return 0.0;
  const auto lattice = build_lattice(inst.features, layout, weights);
  const auto tr = layout.transitions(weights);
  const auto m = marginals(lattice, tr);
  const double nll = m.log_z - score_path(lattice, tr, inst.gold);

  for (std::size_t t = 0; t < n; ++t) {
    const auto node = m.node.row(t);
    for (const auto f : inst.features.at(t)) {
      double* g = grad.data() + layout.emission(f, 0);
      for (std::size_t y = 0; y < L; ++y) g[y] += node[y];
      g[inst.gold[t]] -= 1.0;
    }
  }
  double* pair = grad.data() + layout.pair_offset();
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const double* e = m.edge.data() + t * L * L;
    for (std::size_t k = 0; k < L * L; ++k) pair[k] += e[k];
    pair[inst.gold[t] * L + inst.gold[t + 1]] -= 1.0;
  }
  double* begin = grad.data() + layout.begin_offset();
  double* end = grad.data() + layout.end_offset();
  for (std::size_t y = 0; y < L; ++y) {
    begin[y] += m.node(0, y);
    end[y] += m.node(n - 1, y);
  }
  begin[inst.gold.front()] -= 1.0;
  end[inst.gold.back()] -= 1.0;
  return nll;
}

double accumulate_range(std::span<const TrainingInstance* const> batch, const ParameterLayout& layout,
                        std::span<const double> weights, std::span<double> grad) {
  double f = 0.0;
  for (const auto* inst : batch) f += accumulate_instance(*inst, layout, weights, grad);
  return f;
}

}  // namespace

double nll_and_gradient(std::span<const TrainingInstance* const> batch, const ParameterLayout& layout,
                        std::span<const double> weights, double l2, std::span<double> grad,
                        std::size_t threads) {
  if (weights.size() != layout.size() || grad.size() != layout.size()) {
    throw LengthMismatch("parameter vector size does not match the layout");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(batch.size(), 1));

  double objective = 0.0;
  if (threads == 1) {
    objective = accumulate_range(batch, layout, weights, grad);
  } else {
    // Contiguous chunks, reduced in chunk order so the sums do not depend on scheduling.
    std::vector<double> partial_f(threads, 0.0);
    std::vector<std::vector<double>> partial_g(threads - 1, std::vector<double>(layout.size(), 0.0));
    const std::size_t chunk = (batch.size() + threads - 1) / threads;
    std::vector<std::thread> workers;
    for (std::size_t k = 0; k < threads; ++k) {
      const std::size_t lo = std::min(batch.size(), k * chunk);
      const std::size_t hi = std::min(batch.size(), lo + chunk);
      std::span<double> target = k == 0 ? grad : std::span<double>(partial_g[k - 1]);
      workers.emplace_back([&, lo, hi, k, target] {
        partial_f[k] = accumulate_range(batch.subspan(lo, hi - lo), layout, weights, target);
      });
    }
    for (auto& w : workers) w.join();
    for (std::size_t k = 0; k < threads; ++k) {
      objective += partial_f[k];
      if (k == 0) continue;
      const auto& pg = partial_g[k - 1];
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += pg[i];
    }
  }

  double norm2 = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    norm2 += weights[i] * weights[i];
    grad[i] += l2 * weights[i];
  }
  return objective + 0.5 * l2 * norm2;
}

double nll_and_gradient(std::span<const TrainingInstance> batch, const ParameterLayout& layout,
                        std::span<const double> weights, double l2, std::span<double> grad,
                        std::size_t threads) {
  std::vector<const TrainingInstance*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& inst : batch) ptrs.push_back(&inst);
  return nll_and_gradient(std::span<const TrainingInstance* const>(ptrs), layout, weights, l2, grad, threads);
}

namespace {

void train_lbfgs(const std::vector<TrainingInstance>& instances, const CrfConfig& config,
                 LinearChainModel& chain, TrainingMeta& meta) {
  const auto layout = chain.layout();
  const Objective objective = [&](std::span<const double> x, std::span<double> g) {
    return nll_and_gradient(instances, layout, x, config.l2, g, config.threads);
  };
  LbfgsOptions options;
  options.history = config.lbfgs_history;
  options.max_iterations = config.max_iterations;
  options.tolerance = config.tolerance;
  const auto result = minimize_lbfgs(objective, chain.weights, options);
  meta.iterations = result.iterations;
  meta.converged = result.converged;
  meta.status = result.status;
  meta.trace = result.trace;
  meta.final_objective = result.trace.back();
}

void train_adagrad(const std::vector<TrainingInstance>& instances, const CrfConfig& config,
                   LinearChainModel& chain, TrainingMeta& meta) {
  const auto layout = chain.layout();
  auto& w = chain.weights;
  std::vector<double> grad(layout.size());
  std::vector<double> accum(layout.size(), 0.0);

  std::vector<const TrainingInstance*> order;
  for (const auto& inst : instances) order.push_back(&inst);
  const double total = static_cast<double>(order.size());
  const std::size_t batch_size = std::max<std::size_t>(config.batch_size, 1);

  auto full_objective = [&] { return nll_and_gradient(instances, layout, w, config.l2, grad, config.threads); };
  meta.trace.push_back(full_objective());

  std::mt19937_64 rng(config.seed);
  meta.status = "iteration limit reached";
  for (std::size_t epoch = 0; epoch < config.max_iterations; ++epoch) {
    seeded_shuffle(order, rng);
    for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
      const std::size_t hi = std::min(order.size(), lo + batch_size);
      const std::span<const TrainingInstance* const> batch(order.data() + lo, hi - lo);
      const double scale = static_cast<double>(hi - lo) / total;
      nll_and_gradient(batch, layout, w, config.l2 * scale, grad, config.threads);
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (grad[i] == 0.0) continue;
        accum[i] += grad[i] * grad[i];
        w[i] -= config.learning_rate * grad[i] / (std::sqrt(accum[i]) + 1e-8);
      }
    }
    const double prev = meta.trace.back();
    meta.trace.push_back(full_objective());
    meta.iterations = epoch + 1;
    if (std::abs(prev - meta.trace.back()) / std::max(1.0, std::abs(prev)) < config.tolerance) {
      meta.converged = true;
      meta.status = "relative objective change below tolerance";
      break;
    }
  }
  meta.final_objective = meta.trace.back();
}

}  // namespace

CrfModel train_crf(const Corpus& corpus, const CrfConfig& config, const Gazetteer* gazetteer) {
  const auto labels = entity_labels(corpus);
  const bool any_gold = std::any_of(corpus.sentences.begin(), corpus.sentences.end(),
                                    [](const Sentence& s) { return s.gold_tags && !s.empty(); });
  if (!any_gold) throw NoTrainingData("training corpus has no gold-tagged sentences");

  CrfModel model;
  model.l2 = config.l2;
  model.chain.labels = LabelSet::from_entity_labels(labels);
  model.chain.feature_config = config.features;
  const FeatureExtractor extractor(config.features, gazetteer);
  model.chain.features = index_corpus_features(corpus, extractor, config.feature_min_count);
  model.chain.weights.assign(model.chain.layout().size(), 0.0);

  const auto instances = make_instances(corpus, extractor, model.chain.features, model.chain.labels);
  if (config.optimizer == Optimizer::Lbfgs) {
    train_lbfgs(instances, config, model.chain, model.meta);
  } else {
    train_adagrad(instances, config, model.chain, model.meta);
  }
  return model;
}

Decoded viterbi_decode(const Sentence& sentence, const CrfModel& model, const FeatureExtractor& extractor) {
  const auto lattice = model.chain.lattice(featurize(sentence, extractor, model.chain.features));
  return viterbi(lattice, model.chain.transitions(), &model.chain.labels);
}

CrfDetector::CrfDetector(CrfModel model, std::string name, const Gazetteer* gazetteer)
    : model_(std::move(model)), name_(std::move(name)), extractor_(model_.chain.feature_config, gazetteer) {}

std::vector<EntitySpan> CrfDetector::detect(const Sentence& sentence) const {
  if (sentence.empty()) return {};
  const auto& chain = model_.chain;
  const auto lattice = chain.lattice(featurize(sentence, extractor_, chain.features));
  const auto tr = chain.transitions();
  const auto decoded = viterbi(lattice, tr, &chain.labels);
  auto spans = spans_from_tags(to_tags(chain.labels, decoded.path), Validation::Lenient);
  if (spans.empty()) return spans;

  const auto m = marginals(lattice, tr);
  for (auto& span : spans) {
    double sum = 0.0;
    for (std::size_t t = span.start_token; t < span.end_token; ++t) sum += m.node(t, decoded.path[t]);
    span.score = std::clamp(sum / static_cast<double>(span.length()), 0.0, 1.0);
  }
  return spans;
}

}  // namespace textanon
