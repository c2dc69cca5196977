#include <doctest.h>

#include "oracles.hpp"

#include <textanon/error.hpp>
#include <textanon/model_io.hpp>

#include <filesystem>
#include <sstream>

using namespace textanon;

namespace {

template <class Model>
std::string serialize(const Model& m) {
  std::ostringstream out;
  save_model(out, m);
  return out.str();
}

void check_same_chain(const LinearChainModel& a, const LinearChainModel& b) {
  CHECK(a.labels.tags() == b.labels.tags());
  CHECK(a.features.names() == b.features.names());
  CHECK(a.weights == b.weights);
  CHECK(a.feature_config.window == b.feature_config.window);
  CHECK(a.feature_config.use_pos == b.feature_config.use_pos);
}

}  // namespace

TEST_CASE("CRF models round-trip exactly") {
  const auto corpus = testing::synthetic_corpus(40, 3);
  CrfConfig cfg;
  cfg.max_iterations = 15;
  cfg.features.max_affix = 3;
  const auto model = train_crf(corpus, cfg);
  const auto text = serialize(model);
  std::istringstream in(text);
  const auto back = load_crf(in);
  check_same_chain(model.chain, back.chain);
  CHECK(back.l2 == model.l2);
  CHECK(back.meta.trace == model.meta.trace);
  CHECK(back.chain.feature_config.max_affix == 3);
  CHECK(serialize(back) == text);

  const CrfDetector a(model), b(back);
  for (const auto& s : corpus.sentences) CHECK(a.detect(s) == b.detect(s));
}

TEST_CASE("perceptron models round-trip exactly") {
  const auto corpus = testing::synthetic_corpus(40, 4);
  const auto model = train_perceptron(corpus);
  const auto text = serialize(model);
  std::istringstream in(text);
  const auto any = load_model(in);
  REQUIRE(std::holds_alternative<PerceptronModel>(any));
  const auto& back = std::get<PerceptronModel>(any);
  check_same_chain(model.chain, back.chain);
  CHECK(back.meta.mistakes_per_epoch == model.meta.mistakes_per_epoch);
  CHECK(serialize(back) == text);
}

TEST_CASE("files round-trip through save_model_file") {
  const auto corpus = testing::synthetic_corpus(20, 5);
  const auto path = std::filesystem::temp_directory_path() / "textanon_model_io_test.model";
  const AnyModel m = train_perceptron(corpus);
  save_model_file(path, m);
  const auto back = load_model(path);
  CHECK(std::holds_alternative<PerceptronModel>(back));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), LoadError);
}

TEST_CASE("malformed model text is a LoadError") {
  const auto corpus = testing::synthetic_corpus(20, 6);
  const auto good = serialize(train_perceptron(corpus));

  auto load = [](const std::string& text) {
    std::istringstream in(text);
    return load_model(in);
  };
  CHECK_THROWS_AS(load(""), LoadError);
  CHECK_THROWS_AS(load("not a model\n"), LoadError);
  CHECK_THROWS_AS(load(good.substr(0, good.size() / 2)), LoadError);

  auto replaced = good;
  replaced.replace(replaced.find("textanon-model 1"), 16, "textanon-model 9");
  CHECK_THROWS_AS(load(replaced), LoadError);

  auto bad_kind = good;
  bad_kind.replace(bad_kind.find("kind perceptron"), 15, "kind quantum000");
  CHECK_THROWS_AS(load(bad_kind), LoadError);

  // A CRF loader refuses a perceptron file.
  std::istringstream in(good);
  CHECK_THROWS_AS(load_crf(in), LoadError);
}
