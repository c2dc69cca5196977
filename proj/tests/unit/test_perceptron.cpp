#include <doctest.h>

#include "oracles.hpp"

#include <textanon/crf.hpp>
#include <textanon/error.hpp>
#include <textanon/eval.hpp>
#include <textanon/model_io.hpp>
#include <textanon/perceptron.hpp>

#include <numeric>
#include <sstream>

using namespace textanon;

namespace {

double entity_f1(const Detector& det, const Corpus& corpus) {
  std::vector<std::vector<EntitySpan>> gold, pred;
  for (const auto& s : corpus.sentences) {
    gold.push_back(spans_from_tags(*s.gold_tags));
    pred.push_back(det.detect(s));
  }
  return entity_prf(gold, pred).micro.f1;
}

}  // namespace

TEST_CASE("separable data is fitted within five epochs") {
  const auto corpus = testing::synthetic_corpus(60, 21);
  PerceptronConfig cfg;
  cfg.epochs = 5;
  const auto model = train_perceptron(corpus, cfg);
  CHECK(model.meta.epochs == 5);
  CHECK(model.meta.steps == 5 * corpus.size());
  CHECK(model.meta.mistakes_per_epoch.back() == 0);
  const PerceptronDetector det(model);
  CHECK(entity_f1(det, corpus) == 1.0);
}

TEST_CASE("served weights are the mean of the per-visit snapshots") {
  const auto corpus = testing::synthetic_corpus(25, 2);
  std::vector<double> sum;
  std::vector<double> prev;
  std::size_t visits = 0, changed = 0;
  bool conserved = true;
  PerceptronConfig cfg;
  cfg.epochs = 3;
  cfg.step_observer = [&](std::span<const double> w) {
    if (sum.empty()) {
      sum.assign(w.size(), 0.0);
      prev.assign(w.size(), 0.0);
    }
    double delta = 0.0;
    bool differs = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum[i] += w[i];
      delta += w[i] - prev[i];
      differs = differs || w[i] != prev[i];
    }
    // Each update adds the gold path and subtracts the predicted one, which
    // touch the same number of emission, transition, begin and end weights.
    conserved = conserved && std::abs(delta) < 1e-9;
    changed += differs;
    prev.assign(w.begin(), w.end());
    ++visits;
  };
  const auto model = train_perceptron(corpus, cfg);
  CHECK(conserved);
  CHECK(visits == model.meta.steps);
  // A correct prediction leaves the weights untouched.
  CHECK(changed == model.meta.updates);
  CHECK(model.meta.updates ==
        std::accumulate(model.meta.mistakes_per_epoch.begin(), model.meta.mistakes_per_epoch.end(), std::size_t{0}));
  REQUIRE(sum.size() == model.chain.weights.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(model.chain.weights[i] == doctest::Approx(sum[i] / static_cast<double>(visits)).epsilon(1e-12));
  }
}

TEST_CASE("training is deterministic for a fixed shuffle seed") {
  const auto corpus = testing::synthetic_corpus(40, 6);
  std::ostringstream a, b, c;
  save_model(a, train_perceptron(corpus));
  save_model(b, train_perceptron(corpus));
  CHECK(a.str() == b.str());
  PerceptronConfig other;
  other.shuffle_seed = 99;
  other.epochs = 1;
  PerceptronConfig same = other;
  same.shuffle_seed = 13;
  save_model(c, train_perceptron(corpus, other));
  std::ostringstream d;
  save_model(d, train_perceptron(corpus, same));
  // A single epoch over a different visiting order gives different weights.
  CHECK(c.str() != d.str());
}

TEST_CASE("decoded tags are always valid BIO2") {
  const auto corpus = testing::synthetic_corpus(30, 8);
  PerceptronConfig cfg;
  cfg.epochs = 1;
  const PerceptronDetector det(train_perceptron(corpus, cfg));
  const auto probe = testing::synthetic_corpus(80, 99);
  for (const auto& s : probe.sentences) {
    const auto tags = det.model().chain.decode(s, FeatureExtractor(det.model().chain.feature_config));
    CHECK(is_valid_bio2(tags));
    for (const auto& sp : det.detect(s)) CHECK(sp.score == 1.0);
  }
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_AS(train_perceptron(Corpus{}), NoTrainingData);
}

TEST_CASE("identical weights decode identically to the CRF") {
  const auto corpus = testing::synthetic_corpus(40, 12);
  CrfConfig cfg;
  cfg.max_iterations = 25;
  const auto crf = train_crf(corpus, cfg);
  PerceptronModel clone;
  clone.chain = crf.chain;
  const CrfDetector a(crf);
  const PerceptronDetector b(clone);
  for (const auto& s : testing::synthetic_corpus(50, 13).sentences) {
    auto spans = a.detect(s);
    for (auto& sp : spans) sp.score = 1.0;
    CHECK(b.detect(s) == spans);
  }
  const std::vector<std::string> plain = {"the", "old", "is"};
  CHECK(b.detect(Sentence::from_words(plain)).empty() == a.detect(Sentence::from_words(plain)).empty());
}
