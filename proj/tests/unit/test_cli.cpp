#include <doctest.h>

#include <textanon/anonymise.hpp>
#include <textanon/corpus.hpp>
#include <textanon/eval.hpp>
#include <textanon_cli/cli.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace textanon;
namespace fs = std::filesystem;

namespace {

const fs::path kData = TEXTANON_TEST_DATA;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "textanon");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Fresh scratch directory, removed on destruction.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("textanon_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& content) const {
    std::ofstream(dir / file, std::ios::binary) << content;
    return dir / file;
  }
  std::string read(const std::string& file) const {
    std::ifstream in(dir / file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

std::string manifest() { return (kData / "tiny_manifest.ini").string(); }

}  // namespace

TEST_CASE("validate prints counts for the fixture") {
  const auto r = run({"validate", "--manifest", manifest()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("train sentences=6 tokens=35 entities=13 documents=2") != std::string::npos);
  CHECK(r.out.find("test label PER=4") != std::string::npos);
}

TEST_CASE("validate rejects malformed input with exit 2") {
  Scratch s("validate");
  const auto bad = s.write("bad.conll", "John NNP B-PER\nlonely\n");
  const auto r = run({"validate", bad.string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("bad.conll:2:") != std::string::npos);
  CHECK(run({"validate", "--manifest", (s.dir / "missing.ini").string()}).code == cli::kExitInput);
  CHECK(run({"validate", "--no-such-flag"}).code == cli::kExitInput);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("train writes deterministic models and fails without a train split") {
  Scratch s("train");
  const auto a = run({"train", "--manifest", manifest(), "--backend", "crf", "--out", (s.dir / "a.model").string()});
  REQUIRE(a.code == cli::kExitOk);
  CHECK(a.out.find("iteration 0 objective") != std::string::npos);
  const auto b = run({"train", "--manifest", manifest(), "--backend", "crf", "--out", (s.dir / "b.model").string()});
  REQUIRE(b.code == cli::kExitOk);
  CHECK(s.read("a.model") == s.read("b.model"));

  const auto p = run({"train", "--manifest", manifest(), "--backend", "perceptron", "--out-dir", s.dir.string()});
  REQUIRE(p.code == cli::kExitOk);
  CHECK(p.out.find("epoch 1 mistakes") != std::string::npos);
  CHECK(fs::exists(s.dir / "perceptron.model"));

  const auto empty_manifest = s.write("m.ini", "test = " + (kData / "tiny.conll").string() + "\n");
  CHECK(run({"train", "--manifest", empty_manifest.string()}).code == cli::kExitTraining);
  CHECK(run({"train"}).code == cli::kExitTraining);
}

TEST_CASE("tag through the rules engine and a trained model") {
  Scratch s("tag");
  const auto raw = s.write("raw.txt", "Email jane@example.com today\n");
  const auto r = run({"tag", "--rules", "--input", raw.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("jane@example.com B-EMAIL") != std::string::npos);
  const auto parsed = parse_conll(r.out);
  CHECK(parsed.size() == 1);

  REQUIRE(run({"train", "--manifest", manifest(), "--out", (s.dir / "crf.model").string()}).code == cli::kExitOk);
  const auto conll = run({"tag", "--model", (s.dir / "crf.model").string(), "--input", (kData / "tiny.conll").string(),
                          "--output", (s.dir / "tagged.conll").string()});
  REQUIRE(conll.code == cli::kExitOk);
  const auto original = load_conll(kData / "tiny.conll");
  ParseOptions raw_opts;
  raw_opts.normalize_bio2 = false;
  const auto tagged = parse_conll(s.read("tagged.conll"), raw_opts);
  REQUIRE(tagged.size() == original.size());
  CHECK(tagged.columns == original.columns + 1);
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    for (std::size_t t = 0; t < tagged.sentences[i].size(); ++t) {
      const auto& tok = tagged.sentences[i].tokens[t];
      CHECK(tok.text == original.sentences[i].tokens[t].text);
      // The original columns come first, then the gold tag, then the prediction.
      for (std::size_t k = 0; k < original.sentences[i].tokens[t].annotations.size(); ++k) {
        CHECK(tok.annotations[k] == original.sentences[i].tokens[t].annotations[k]);
      }
    }
    CHECK(is_valid_bio2(*tagged.sentences[i].gold_tags));
  }

  const auto broken = s.write("broken.model", "textanon-model 1\nkind crf\n");
  CHECK(run({"tag", "--model", broken.string(), "--input", raw.string()}).code == cli::kExitLoad);
  const auto bad_registry = s.write("bad.ini", "[recognizer.x]\nlabel = X\npattern = (\n");
  CHECK(run({"tag", "--rules", "--registry", bad_registry.string(), "--input", raw.string()}).code == cli::kExitLoad);
}

TEST_CASE("anonymise the example sentence and restore it") {
  Scratch s("anon");
  const auto input = s.write("example.conll", "John B-PER\nSmith I-PER\nworks O\nat O\nHSBC B-ORG\nBank I-ORG\n");
  const auto removal = run({"anonymise", "--detector", "gold", "--input", input.string(), "--stdout", "--out-dir",
                            s.dir.string()});
  REQUIRE(removal.code == cli::kExitOk);
  CHECK(removal.out.rfind("<REF> works at <REF>\n", 0) == 0);

  const auto loc = s.write("example_loc.conll", "John B-PER\nSmith I-PER\nworks O\nat O\nHSBC B-LOC\nBank I-LOC\n");
  const auto cat = run({"anonymise", "--detector", "gold", "--strategy", "categorisation", "--input", loc.string(),
                        "--stdout", "--out-dir", s.dir.string()});
  REQUIRE(cat.code == cli::kExitOk);
  CHECK(cat.out.rfind("<PERSON> works at <LOCATION>\n", 0) == 0);

  const auto raw = s.write("note.txt", "Mail jane@example.com or call 555-0188.\nNothing here.\n");
  const auto pseudo = run({"anonymise", "--strategy", "pseudonymisation", "--input", raw.string(), "--out-dir",
                           s.dir.string()});
  REQUIRE(pseudo.code == cli::kExitOk);
  const auto anon = s.read("note.anon.txt");
  CHECK(anon.find("jane@example.com") == std::string::npos);
  const auto back = run({"anonymise", "--input", (s.dir / "note.anon.txt").string(), "--restore",
                         (s.dir / "note.audit.jsonl").string(), "--out-dir", s.dir.string()});
  REQUIRE(back.code == cli::kExitOk);
  CHECK(s.read("note.anon.restored.txt") == s.read("note.txt"));

  CHECK(run({"anonymise", "--input", raw.string(), "--restore", (s.dir / "none.jsonl").string()}).code ==
        cli::kExitLoad);
  CHECK(run({"anonymise", "--detector", "gold", "--strategy", "shred", "--input", raw.string()}).code ==
        cli::kExitInput);
}

TEST_CASE("benchmark over models, rules and imports") {
  Scratch s("bench");
  REQUIRE(run({"train", "--manifest", manifest(), "--out", (s.dir / "crf.model").string()}).code == cli::kExitOk);
  REQUIRE(run({"train", "--manifest", manifest(), "--backend", "perceptron", "--out",
               (s.dir / "perc.model").string()})
              .code == cli::kExitOk);
  const auto r = run({"benchmark", "--manifest", manifest(), "--model", (s.dir / "crf.model").string(), "--model",
                      (s.dir / "perc.model").string(), "--rules", "--out-dir", s.dir.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("| CRF |") != std::string::npos);
  CHECK(r.out.find("| Perceptron |") != std::string::npos);
  CHECK(r.out.find("| Rules |") != std::string::npos);
  CHECK(r.out.find("CRF: entity F1") != std::string::npos);
  CHECK(r.out.rfind(s.read("benchmark.md"), 0) == 0);
  const auto records = parse_report_csv(s.read("benchmark.csv"));
  std::set<std::string> models;
  for (const auto& rec : records) models.insert(rec.model);
  CHECK(models.size() == 3);

  // The gold file itself as an import adds a perfect row that sorts first.
  const auto with_import = run({"benchmark", "--manifest", manifest(), "--rules", "--import",
                                (kData / "tiny.conll").string(), "--format", "csv", "--out-dir", s.dir.string()});
  REQUIRE(with_import.code == cli::kExitOk);
  CHECK(with_import.out.find("tiny,entity,micro,1.00,1.00,1.00") != std::string::npos);

  const auto misaligned = s.write("short.conll", "John NNP B-NP B-PER\n");
  CHECK(run({"benchmark", "--manifest", manifest(), "--import", misaligned.string(), "--out-dir", s.dir.string()})
            .code == cli::kExitBenchmark);
  const auto broken = s.write("broken.model", "garbage\n");
  CHECK(run({"benchmark", "--manifest", manifest(), "--model", broken.string(), "--out-dir", s.dir.string()}).code ==
        cli::kExitLoad);
  CHECK(run({"benchmark", "--manifest", manifest(), "--out-dir", s.dir.string()}).code == cli::kExitInput);
}
