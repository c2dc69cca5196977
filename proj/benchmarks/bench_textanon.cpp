#include <textanon/crf.hpp>
#include <textanon/features.hpp>
#include <textanon/linear_chain.hpp>
#include <textanon/rules.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace textanon;

namespace {

// CoNLL-like label count: O plus B/I for four entity types.
constexpr std::size_t kLabels = 9;

struct Chain {
  Lattice lattice;
  std::vector<double> pair, begin, end;
  TransitionScores view() const { return {kLabels, pair, begin, end}; }
};

Chain random_chain(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Chain c{Lattice(n, kLabels), std::vector<double>(kLabels * kLabels), std::vector<double>(kLabels),
          std::vector<double>(kLabels)};
  for (auto* v : {&c.lattice.data, &c.pair, &c.begin, &c.end}) {
    for (auto& x : *v) x = nd(rng);
  }
  return c;
}

Sentence random_sentence(std::size_t n, std::mt19937_64& rng) {
  static const char* words[] = {"The", "bank", "in", "London", "said", "John", "Smith", "on", "Tuesday", ",", "EU",
                                "rejects", "German", "call", "1996-08-22", "shares", "fell", "3.5", "%", "."};
  std::vector<std::string> w(n);
  for (auto& x : w) x = words[rng() % std::size(words)];
  return Sentence::from_words(w);
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto c = random_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(marginals(c.lattice, c.view()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(10)->Arg(40)->Arg(120);

void BM_Viterbi(benchmark::State& state) {
  const auto c = random_chain(static_cast<std::size_t>(state.range(0)));
  const std::vector<std::string> entity = {"PER", "ORG", "LOC", "MISC"};
  const auto labels = LabelSet::from_entity_labels(entity);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(c.lattice, c.view(), &labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Arg(10)->Arg(40)->Arg(120);

void BM_FeatureExtraction(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto s = random_sentence(static_cast<std::size_t>(state.range(0)), rng);
  const FeatureExtractor fx;
  for (auto _ : state) benchmark::DoNotOptimize(fx.extract_all(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureExtraction)->Arg(15)->Arg(40);

void BM_Gradient(benchmark::State& state) {
  std::mt19937_64 rng(3);
  Corpus corpus;
  for (int i = 0; i < 200; ++i) {
    auto s = random_sentence(15, rng);
    std::vector<NerTag> tags(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (s.tokens[t].text == "John") tags[t] = NerTag::begin("PER");
      if (s.tokens[t].text == "London") tags[t] = NerTag::begin("LOC");
    }
    s.gold_tags = std::move(tags);
    corpus.sentences.push_back(std::move(s));
  }
  const FeatureExtractor fx;
  const auto index = index_corpus_features(corpus, fx, 1);
  const auto labels = LabelSet::from_entity_labels(entity_labels(corpus));
  const auto inst = make_instances(corpus, fx, index, labels);
  const ParameterLayout layout{index.size(), labels.size()};
  std::vector<double> w(layout.size(), 0.01), g(layout.size());
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nll_and_gradient(inst, layout, w, 1.0, g, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(inst.size()));
}
BENCHMARK(BM_Gradient)->Arg(1)->Arg(4);

void BM_RuleDetect(benchmark::State& state) {
  const auto registry = RecognizerRegistry::defaults();
  const std::string text =
      "Contact jane.doe@example.com or call +44 20 7946 0958 about card 4111 1111 1111 1111, "
      "issued 2021-03-04 from host 192.168.0.17 to the London office.";
  for (auto _ : state) benchmark::DoNotOptimize(rule_detect(text, registry));
  state.SetBytesProcessed(state.iterations() * static_cast<long>(text.size()));
}
BENCHMARK(BM_RuleDetect);

}  // namespace

BENCHMARK_MAIN();
