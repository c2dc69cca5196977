#include "textanon_cli/cli.hpp"
#include "textanon_cli/config.hpp"

#include <textanon/anonymise.hpp>
#include <textanon/error.hpp>
#include <textanon/eval.hpp>
#include <textanon/model_io.hpp>
#include <textanon/rules.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

namespace textanon::cli {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<std::string> manifest;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config, "INI run configuration");
  cmd.add_option("--seed", o.seed, "Seed for every random choice (overrides the config)");
  cmd.add_option("--out-dir", o.out_dir, "Output directory (overrides the config)");
  cmd.add_option("--format", o.format, "Output format");
  cmd.add_option("--manifest", o.manifest, "Corpus manifest (overrides the config)");
}

Config resolve_config(const CommonOptions& o) {
  Config c = o.config.empty() ? Config{} : load_config(o.config);
  if (o.seed) set_seed(c, *o.seed);
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.format) c.format = *o.format;
  if (o.manifest) c.manifest = fs::path(*o.manifest);
  validate_paths(c);
  return c;
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("[%l] %v");
  auto logger = std::make_shared<spdlog::logger>("textanon", sink);
  auto level = spdlog::level::info;
  if (const char* env = std::getenv(kLogLevelEnv); env && *env) level = spdlog::level::from_str(env);
  logger->set_level(level);
  return logger;
}

// Maps library errors to the exit-code contract; `fallback` covers errors
// that belong to the running command.
int guarded(int fallback, spdlog::logger& log, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const LoadError& e) {
    log.error("{}", e.what());
    return kExitLoad;
  } catch (const ImportMisalignment& e) {
    log.error("{}", e.what());
    return kExitBenchmark;
  } catch (const AlignmentError& e) {
    log.error("{}", e.what());
    return kExitBenchmark;
  } catch (const NoTrainingData& e) {
    log.error("{}", e.what());
    return kExitTraining;
  } catch (const ConfigError& e) {
    log.error("{}", e.what());
    return kExitInput;
  } catch (const MalformedLine& e) {
    log.error("{}", e.what());
    return kExitInput;
  } catch (const UnknownTag& e) {
    log.error("{}", e.what());
    return kExitInput;
  } catch (const InvalidScheme& e) {
    log.error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    log.error("{}", e.what());
    return fallback;
  }
}

// Rethrows anything raised by `load` as a LoadError.
template <typename F>
auto as_load(F&& load) -> decltype(load()) {
  try {
    return load();
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw LoadError(e.what());
  }
}

Gazetteer load_gazetteer(const Config& c) {
  Gazetteer g;
  for (const auto& [label, path] : c.gazetteers) g.load(label, path);
  return g;
}

Corpus read_input_corpus(const fs::path& path, const std::string& input_format) {
  std::string fmt = input_format;
  if (fmt.empty() || fmt == "auto") fmt = path.extension() == ".conll" ? "conll" : "raw";
  if (fmt == "conll") return load_conll(path);
  if (fmt != "raw") throw ConfigError("input format must be raw, conll or auto, got '" + fmt + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input '" + path.string() + "'");
  Corpus corpus;
  corpus.columns = 1;
  std::string line;
  while (std::getline(in, line)) {
    auto s = tokenize_raw(line);
    if (!s.empty()) corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open input '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

// Owns detectors together with the gazetteer they point into.
struct DetectorSet {
  std::unique_ptr<Gazetteer> gazetteer;
  std::vector<std::unique_ptr<Detector>> owned;

  std::vector<const Detector*> view() const {
    std::vector<const Detector*> v;
    for (const auto& d : owned) v.push_back(d.get());
    return v;
  }
};

std::unique_ptr<Detector> model_detector(const fs::path& path, const Gazetteer* gaz) {
  auto model = as_load([&] { return load_model(path); });
  if (auto* crf = std::get_if<CrfModel>(&model)) return std::make_unique<CrfDetector>(std::move(*crf), "CRF", gaz);
  return std::make_unique<PerceptronDetector>(std::get<PerceptronModel>(std::move(model)), "Perceptron", gaz);
}

std::unique_ptr<Detector> rules_detector(const Config& c) {
  auto registry = as_load([&] {
    return c.rules_registry ? RecognizerRegistry::load(*c.rules_registry) : RecognizerRegistry::defaults();
  });
  return std::make_unique<RulesDetector>(std::move(registry), c.rules_threshold, c.rules_window);
}

std::unique_ptr<Detector> named_detector(const std::string& name, const Config& c, const Gazetteer* gaz) {
  if (name == "rules") return rules_detector(c);
  if (name == "gold") return std::make_unique<GoldDetector>();
  if (name == "crf") {
    if (!c.crf_model) throw ConfigError("detector 'crf' needs [detectors] crf_model or --model");
    return model_detector(*c.crf_model, gaz);
  }
  if (name == "perceptron") {
    if (!c.perceptron_model) throw ConfigError("detector 'perceptron' needs [detectors] perceptron_model or --model");
    return model_detector(*c.perceptron_model, gaz);
  }
  throw ConfigError("unknown detector '" + name + "'");
}

Strategy make_strategy(const Config& c) {
  if (c.strategy == "removal") return Removal{c.placeholder};
  if (c.strategy == "categorisation") {
    Categorisation cat;
    for (const auto& [label, name] : c.categories) cat.placeholders[label] = name;
    return cat;
  }
  if (c.strategy == "pseudonymisation") {
    Pseudonymisation p;
    p.seed = c.seed;
    for (const auto& [label, path] : c.dictionaries) as_load([&] { p.dictionaries.load(label, path); });
    return p;
  }
  throw ConfigError("unknown strategy '" + c.strategy + "'");
}

void print_counts(std::ostream& out, std::string_view name, const Corpus& corpus) {
  std::size_t entities = 0;
  std::map<std::string, std::size_t> per_label;
  for (const auto& s : corpus.sentences) {
    if (!s.gold_tags) continue;
    for (const auto& span : spans_from_tags(*s.gold_tags, Validation::Lenient)) {
      ++entities;
      ++per_label[span.label];
    }
  }
  out << name << " sentences=" << corpus.size() << " tokens=" << corpus.token_count() << " entities=" << entities
      << " documents=" << corpus.document_count() << '\n';
  for (const auto& [label, n] : per_label) out << name << " label " << label << '=' << n << '\n';
}

Manifest require_manifest(const Config& c) {
  if (!c.manifest) throw ConfigError("no corpus manifest given (use --manifest or the config 'manifest' key)");
  auto m = load_manifest(*c.manifest);
  if (c.seed_set) m.seed = c.seed;
  return m;
}

// validate ------------------------------------------------------------------

struct ValidateOptions {
  CommonOptions common;
  std::vector<std::string> files;
};

void cmd_validate(const ValidateOptions& o, std::ostream& out) {
  const auto c = resolve_config(o.common);
  if (o.files.empty() && !c.manifest) throw ConfigError("validate needs a manifest or corpus files");
  for (const auto& f : o.files) print_counts(out, f, load_conll(f));
  if (c.manifest) {
    const auto splits = load_splits(require_manifest(c));
    print_counts(out, "train", splits.train);
    print_counts(out, "validation", splits.validation);
    print_counts(out, "test", splits.test);
  }
}

// train ---------------------------------------------------------------------

struct TrainOptions {
  CommonOptions common;
  std::string backend = "crf";
  std::string out;
};

void cmd_train(const TrainOptions& o, std::ostream& out, spdlog::logger& log) {
  auto c = resolve_config(o.common);
  if (!c.manifest) throw NoTrainingData("no training split: no corpus manifest given");
  const auto splits = load_splits(require_manifest(c));
  if (splits.train.empty()) throw NoTrainingData("the manifest has no training sentences");
  const auto gazetteer = load_gazetteer(c);
  const Gazetteer* gaz = gazetteer.empty() ? nullptr : &gazetteer;

  const fs::path path = o.out.empty() ? c.out_dir / (o.backend + ".model") : fs::path(o.out);
  log.info("training {} on {} sentences", o.backend, splits.train.size());
  if (o.backend == "crf") {
    c.crf.features = c.features;
    c.crf.feature_min_count = c.feature_min_count;
    const auto model = train_crf(splits.train, c.crf, gaz);
    for (std::size_t i = 0; i < model.meta.trace.size(); ++i) {
      out << "iteration " << i << " objective " << model.meta.trace[i] << '\n';
    }
    out << "status " << model.meta.status << '\n';
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_model_file(path, model);
  } else if (o.backend == "perceptron") {
    c.perceptron.features = c.features;
    c.perceptron.feature_min_count = c.feature_min_count;
    const auto model = train_perceptron(splits.train, c.perceptron, gaz);
    for (std::size_t i = 0; i < model.meta.mistakes_per_epoch.size(); ++i) {
      out << "epoch " << i + 1 << " mistakes " << model.meta.mistakes_per_epoch[i] << '\n';
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_model_file(path, model);
  } else {
    throw ConfigError("backend must be crf or perceptron, got '" + o.backend + "'");
  }
  out << "model " << path.string() << '\n';
}

// tag -----------------------------------------------------------------------

struct TagOptions {
  CommonOptions common;
  std::string model;
  bool rules = false;
  std::string registry;
  std::string input;
  std::string input_format = "auto";
  std::string output;
};

void cmd_tag(const TagOptions& o, std::ostream& out) {
  auto c = resolve_config(o.common);
  if (!o.registry.empty()) c.rules_registry = fs::path(o.registry);
  validate_paths(c);
  if (o.model.empty() == !o.rules) throw ConfigError("tag needs exactly one of --model or --rules");

  DetectorSet set;
  set.gazetteer = std::make_unique<Gazetteer>(as_load([&] { return load_gazetteer(c); }));
  const Gazetteer* gaz = set.gazetteer->empty() ? nullptr : set.gazetteer.get();
  auto detector = o.rules ? rules_detector(c) : model_detector(o.model, gaz);

  const auto corpus = read_input_corpus(o.input, o.input_format);
  std::vector<std::vector<NerTag>> predictions;
  for (const auto& s : corpus.sentences) predictions.push_back(tags_from_spans(detector->detect(s), s.size()));

  std::ostringstream text;
  write_conll(text, corpus, predictions);
  if (o.output.empty()) {
    out << text.str();
  } else {
    write_file(o.output, text.str());
  }
}

// anonymise -----------------------------------------------------------------

struct AnonymiseOptions {
  CommonOptions common;
  std::string detector;
  std::string model;
  std::string strategy;
  std::string input;
  std::string input_format = "auto";
  bool to_stdout = false;
  std::string restore;
};

void cmd_anonymise(const AnonymiseOptions& o, std::ostream& out, spdlog::logger& log) {
  auto c = resolve_config(o.common);
  if (!o.strategy.empty()) c.strategy = o.strategy;
  const fs::path input(o.input);

  if (!o.restore.empty()) {
    std::ifstream audit_in(o.restore, std::ios::binary);
    if (!audit_in) throw LoadError("cannot open audit '" + o.restore + "'");
    const auto audit = read_audit(audit_in);
    const auto restored = restore(read_file(input), audit);
    if (o.to_stdout) {
      out << restored;
    } else {
      const auto path = c.out_dir / (input.stem().string() + ".restored.txt");
      write_file(path, restored);
      out << "restored " << path.string() << '\n';
    }
    return;
  }

  const auto strategy = make_strategy(c);
  DetectorSet set;
  set.gazetteer = std::make_unique<Gazetteer>(as_load([&] { return load_gazetteer(c); }));
  const Gazetteer* gaz = set.gazetteer->empty() ? nullptr : set.gazetteer.get();
  std::unique_ptr<Detector> detector;
  if (!o.model.empty()) {
    detector = model_detector(o.model, gaz);
  } else {
    const std::string name = !o.detector.empty() ? o.detector : c.detectors.empty() ? "rules" : c.detectors.front();
    detector = named_detector(name, c, gaz);
  }
  log.info("anonymising {} with {} ({})", input.string(), detector->name(), c.strategy);

  std::string fmt = o.input_format;
  if (fmt.empty() || fmt == "auto") fmt = input.extension() == ".conll" ? "conll" : "raw";
  const auto anonymisation_plan = fmt == "conll" ? plan_corpus(load_conll(input), *detector, strategy)
                                                 : plan_text(read_file(input), *detector, strategy);
  const auto doc = apply(anonymisation_plan);

  std::ostringstream audit;
  write_audit(audit, doc.audit);
  const auto audit_path = c.out_dir / (input.stem().string() + ".audit.jsonl");
  write_file(audit_path, audit.str());
  if (o.to_stdout) {
    out << doc.text;
    if (doc.text.empty() || doc.text.back() != '\n') out << '\n';
  } else {
    const auto text_path = c.out_dir / (input.stem().string() + ".anon.txt");
    write_file(text_path, doc.text);
    out << "text " << text_path.string() << '\n';
  }
  out << "audit " << audit_path.string() << " (" << doc.audit.size() << " replacements)\n";
}

// benchmark -----------------------------------------------------------------

struct BenchmarkOptions {
  CommonOptions common;
  std::vector<std::string> models;
  bool rules = false;
  std::vector<std::string> imports;
};

void cmd_benchmark(const BenchmarkOptions& o, std::ostream& out, spdlog::logger& log) {
  auto c = resolve_config(o.common);
  for (const auto& i : o.imports) c.imports.emplace_back(i);
  validate_paths(c);
  if (c.format != "markdown" && c.format != "csv") throw ConfigError("format must be markdown or csv");

  const auto splits = load_splits(require_manifest(c));
  if (splits.test.empty()) throw ConfigError("the manifest has no test sentences");

  DetectorSet set;
  set.gazetteer = std::make_unique<Gazetteer>(as_load([&] { return load_gazetteer(c); }));
  const Gazetteer* gaz = set.gazetteer->empty() ? nullptr : set.gazetteer.get();
  for (const auto& name : c.detectors) set.owned.push_back(named_detector(name, c, gaz));
  for (const auto& m : o.models) set.owned.push_back(model_detector(m, gaz));
  if (o.rules) set.owned.push_back(rules_detector(c));

  std::vector<ImportedPredictions> imports;
  for (const auto& p : c.imports) imports.push_back(as_load([&] { return load_predictions(p); }));
  if (set.owned.empty() && imports.empty()) throw ConfigError("benchmark needs at least one detector or import");

  const auto detectors = set.view();
  log.info("benchmarking {} backends on {} test sentences", detectors.size() + imports.size(), splits.test.size());
  const auto table = run_benchmark(splits.test, detectors, imports);

  const auto markdown = render(table, ReportFormat::Markdown);
  const auto csv = render(table, ReportFormat::Csv);
  write_file(c.out_dir / "benchmark.md", markdown);
  write_file(c.out_dir / "benchmark.csv", csv);
  out << (c.format == "csv" ? csv : markdown);
  for (const auto& row : table.rows) {
    if (row.name == "CRF") out << reference_gap(row, c.reference_f1) << '\n';
  }
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"Entity detection, anonymisation and benchmarking for CoNLL-style corpora", "textanon"};
  app.require_subcommand(1);

  ValidateOptions validate;
  auto* v = app.add_subcommand("validate", "Parse corpus files and print counts");
  add_common(*v, validate.common);
  v->add_option("files", validate.files, "CoNLL files to check (in addition to the manifest)");

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train a sequence labeler");
  add_common(*t, train.common);
  t->add_option("--backend", train.backend, "crf or perceptron")->check(CLI::IsMember({"crf", "perceptron"}));
  t->add_option("--out", train.out, "Model file (default <out-dir>/<backend>.model)");

  TagOptions tag;
  auto* g = app.add_subcommand("tag", "Append predicted tags to raw or CoNLL input");
  add_common(*g, tag.common);
  g->add_option("--model", tag.model, "Trained model file");
  g->add_flag("--rules", tag.rules, "Use the rule engine");
  g->add_option("--registry", tag.registry, "Recognizer registry file for --rules");
  g->add_option("--input", tag.input, "Input file")->required();
  g->add_option("--input-format", tag.input_format, "raw, conll or auto");
  g->add_option("--output", tag.output, "Output file (default stdout)");

  AnonymiseOptions anon;
  auto* a = app.add_subcommand("anonymise", "Replace detected entities and write an audit map");
  add_common(*a, anon.common);
  a->add_option("--detector", anon.detector, "crf, perceptron, rules or gold");
  a->add_option("--model", anon.model, "Trained model file (overrides --detector)");
  a->add_option("--strategy", anon.strategy, "removal, categorisation or pseudonymisation");
  a->add_option("--input", anon.input, "Input text or CoNLL file")->required();
  a->add_option("--input-format", anon.input_format, "raw, conll or auto");
  a->add_flag("--stdout", anon.to_stdout, "Print the transformed text instead of writing a file");
  a->add_option("--restore", anon.restore, "Audit file; restores the original text from --input");

  BenchmarkOptions bench;
  auto* b = app.add_subcommand("benchmark", "Score detectors and imported predictions on the test split");
  add_common(*b, bench.common);
  b->add_option("--model", bench.models, "Trained model file (repeatable)");
  b->add_flag("--rules", bench.rules, "Include the rule engine");
  b->add_option("--import", bench.imports, "CoNLL prediction file, predicted tag last (repeatable)");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (v->parsed()) return guarded(kExitInput, *log, [&] { cmd_validate(validate, out); });
  if (t->parsed()) return guarded(kExitTraining, *log, [&] { cmd_train(train, out, *log); });
  if (g->parsed()) return guarded(kExitInput, *log, [&] { cmd_tag(tag, out); });
  if (a->parsed()) return guarded(kExitLoad, *log, [&] { cmd_anonymise(anon, out, *log); });
  return guarded(kExitBenchmark, *log, [&] { cmd_benchmark(bench, out, *log); });
}

}  // namespace textanon::cli
