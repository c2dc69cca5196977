#include "textanon_cli/config.hpp"

#include <textanon/error.hpp>
#include <textanon/ini.hpp>

#include <fstream>
#include <sstream>

namespace textanon::cli {

namespace {

namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::size_t to_size(std::string_view key, std::string_view value) {
  const auto v = ini::to_integer(key, value);
  if (v < 0) throw ConfigError("'" + std::string(key) + "' must not be negative");
  return static_cast<std::size_t>(v);
}

void read_top(const ini::Section& s, const fs::path& base, Config& c) {
  s.require_known({"seed", "out_dir", "manifest"});
  for (const auto& [k, v] : s.entries) {
    if (k == "seed") {
      set_seed(c, static_cast<std::uint64_t>(ini::to_integer(k, v)));
    } else if (k == "out_dir") {
      c.out_dir = resolve(base, v);
    } else if (k == "manifest") {
      c.manifest = resolve(base, v);
    }
  }
}

void read_features(const ini::Section& s, const fs::path& base, Config& c) {
  s.require_known({"window", "max_affix", "context_shapes", "use_pos", "use_chunk", "min_count", "gazetteer.*"});
  for (const auto& [k, v] : s.entries) {
    if (k == "window") {
      c.features.window = static_cast<int>(to_size(k, v));
    } else if (k == "max_affix") {
      c.features.max_affix = to_size(k, v);
    } else if (k == "context_shapes") {
      c.features.context_shapes = ini::to_bool(k, v);
    } else if (k == "use_pos") {
      c.features.use_pos = ini::to_bool(k, v);
    } else if (k == "use_chunk") {
      c.features.use_chunk = ini::to_bool(k, v);
    } else if (k == "min_count") {
      c.feature_min_count = to_size(k, v);
    } else {
      c.gazetteers[k.substr(std::string_view("gazetteer.").size())] = resolve(base, v);
    }
  }
}

void read_crf(const ini::Section& s, Config& c) {
  s.require_known({"l2", "max_iterations", "tolerance", "optimizer", "history", "threads", "batch_size",
                   "learning_rate"});
  for (const auto& [k, v] : s.entries) {
    if (k == "l2") {
      c.crf.l2 = ini::to_double(k, v);
    } else if (k == "max_iterations") {
      c.crf.max_iterations = to_size(k, v);
    } else if (k == "tolerance") {
      c.crf.tolerance = ini::to_double(k, v);
    } else if (k == "optimizer") {
      if (v == "lbfgs") {
        c.crf.optimizer = Optimizer::Lbfgs;
      } else if (v == "adagrad") {
        c.crf.optimizer = Optimizer::Adagrad;
      } else {
        throw ConfigError("optimizer must be lbfgs or adagrad, got '" + v + "'");
      }
    } else if (k == "history") {
      c.crf.lbfgs_history = to_size(k, v);
    } else if (k == "threads") {
      c.crf.threads = std::max<std::size_t>(1, to_size(k, v));
    } else if (k == "batch_size") {
      c.crf.batch_size = to_size(k, v);
    } else if (k == "learning_rate") {
      c.crf.learning_rate = ini::to_double(k, v);
    }
  }
  if (c.crf.l2 < 0) throw ConfigError("l2 must be non-negative");
}

void read_perceptron(const ini::Section& s, Config& c) {
  s.require_known({"epochs"});
  if (const auto v = s.get("epochs")) c.perceptron.epochs = to_size("epochs", *v);
}

void read_detectors(const ini::Section& s, const fs::path& base, Config& c) {
  s.require_known({"use", "crf_model", "perceptron_model", "rules_registry", "rules_threshold", "rules_window",
                   "imports"});
  for (const auto& [k, v] : s.entries) {
    if (k == "use") {
      c.detectors = ini::split_list(v);
      for (const auto& d : c.detectors) {
        if (d != "crf" && d != "perceptron" && d != "rules" && d != "gold") {
          throw ConfigError("unknown detector '" + d + "' (expected crf, perceptron, rules or gold)");
        }
      }
    } else if (k == "crf_model") {
      c.crf_model = resolve(base, v);
    } else if (k == "perceptron_model") {
      c.perceptron_model = resolve(base, v);
    } else if (k == "rules_registry") {
      c.rules_registry = resolve(base, v);
    } else if (k == "rules_threshold") {
      c.rules_threshold = ini::to_double(k, v);
    } else if (k == "rules_window") {
      c.rules_window = to_size(k, v);
    } else if (k == "imports") {
      for (const auto& p : ini::split_list(v)) c.imports.push_back(resolve(base, p));
    }
  }
}

void read_anonymise(const ini::Section& s, const fs::path& base, Config& c) {
  s.require_known({"strategy", "placeholder", "category.*", "dictionary.*"});
  for (const auto& [k, v] : s.entries) {
    if (k == "strategy") {
      c.strategy = v;
    } else if (k == "placeholder") {
      c.placeholder = v;
    } else if (k.rfind("category.", 0) == 0) {
      c.categories[k.substr(std::string_view("category.").size())] = v;
    } else {
      c.dictionaries[k.substr(std::string_view("dictionary.").size())] = resolve(base, v);
    }
  }
  if (c.strategy != "removal" && c.strategy != "categorisation" && c.strategy != "pseudonymisation") {
    throw ConfigError("strategy must be removal, categorisation or pseudonymisation, got '" + c.strategy + "'");
  }
}

void read_benchmark(const ini::Section& s, Config& c) {
  s.require_known({"reference_f1", "format"});
  if (const auto v = s.get("reference_f1")) c.reference_f1 = ini::to_double("reference_f1", *v);
  if (const auto v = s.get("format")) c.format = *v;
}

void require_file(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " '" + p.string() + "' does not exist");
}

}  // namespace

void set_seed(Config& config, std::uint64_t seed) {
  config.seed = seed;
  config.seed_set = true;
  config.crf.seed = seed;
  config.perceptron.shuffle_seed = seed;
}

Config parse_config(std::string_view text, const fs::path& base_dir) {
  Config c;
  const auto doc = ini::parse(text);
  for (const auto& s : doc.sections) {
    if (s.name.empty()) {
      read_top(s, base_dir, c);
    } else if (s.name == "features") {
      read_features(s, base_dir, c);
    } else if (s.name == "crf") {
      read_crf(s, c);
    } else if (s.name == "perceptron") {
      read_perceptron(s, c);
    } else if (s.name == "detectors") {
      read_detectors(s, base_dir, c);
    } else if (s.name == "anonymise") {
      read_anonymise(s, base_dir, c);
    } else if (s.name == "benchmark") {
      read_benchmark(s, c);
    } else {
      throw ConfigError("unknown config section [" + s.name + "]");
    }
  }
  validate_paths(c);
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate_paths(const Config& c) {
  if (c.manifest) require_file(*c.manifest, "manifest");
  for (const auto& [label, p] : c.gazetteers) require_file(p, "gazetteer for " + label);
  if (c.rules_registry) require_file(*c.rules_registry, "rules registry");
  for (const auto& p : c.imports) require_file(p, "prediction import");
  for (const auto& [label, p] : c.dictionaries) require_file(p, "dictionary for " + label);
}

}  // namespace textanon::cli
