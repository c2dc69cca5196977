#include "textanon/model_io.hpp"

#include "textanon/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace textanon {

namespace {

constexpr std::string_view kMagic = "textanon-model";
constexpr int kVersion = 1;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_chain(std::ostream& out, const LinearChainModel& chain) {
  const auto& fc = chain.feature_config;
  out << "features-config window=" << fc.window << " max_affix=" << fc.max_affix
      << " context_shapes=" << fc.context_shapes << " use_pos=" << fc.use_pos
      << " use_chunk=" << fc.use_chunk << '\n';
  out << "labels " << chain.labels.size() << '\n';
  for (const auto& t : chain.labels.tags()) out << t.str() << '\n';
  out << "features " << chain.features.size() << '\n';
  for (const auto& f : chain.features.names()) out << f << '\n';

  const auto layout = chain.layout();
  const auto& w = chain.weights;
  std::size_t nnz = 0;
  for (double v : w) nnz += v != 0.0;
  out << "weights " << nnz << '\n';
  const std::size_t L = layout.labels;
  for (std::size_t f = 0; f < layout.features; ++f) {
    for (std::size_t y = 0; y < L; ++y) {
      const double v = w[layout.emission(f, y)];
      if (v != 0.0) out << "e " << f << ' ' << y << ' ' << format_double(v) << '\n';
    }
  }
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t b = 0; b < L; ++b) {
      const double v = w[layout.pair(a, b)];
      if (v != 0.0) out << "t " << a << ' ' << b << ' ' << format_double(v) << '\n';
    }
  }
  for (std::size_t y = 0; y < L; ++y) {
    if (const double v = w[layout.begin_offset() + y]; v != 0.0) out << "b " << y << ' ' << format_double(v) << '\n';
  }
  for (std::size_t y = 0; y < L; ++y) {
    if (const double v = w[layout.end_offset() + y]; v != 0.0) out << "z " << y << ' ' << format_double(v) << '\n';
  }
  out << "end\n";
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) fail("unexpected end of file");
    ++line_no_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  // "<key> <rest>" with the expected key.
  std::string keyed(std::string_view key) {
    const auto s = line();
    if (s.size() < key.size() + 1 || s.compare(0, key.size(), key) != 0 || s[key.size()] != ' ') {
      fail("expected '" + std::string(key) + "'");
    }
    return s.substr(key.size() + 1);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw LoadError("model file line " + std::to_string(line_no_) + ": " + what);
  }

  template <typename T>
  T number(std::string_view text) const {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) fail("bad number '" + std::string(text) + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Metadata lines up to "features-config".
std::map<std::string, std::string> read_meta(Reader& r, std::string& config_line) {
  std::map<std::string, std::string> meta;
  while (true) {
    const auto s = r.line();
    const auto sp = s.find(' ');
    const auto key = s.substr(0, sp);
    const auto value = sp == std::string::npos ? std::string() : s.substr(sp + 1);
    if (key == "features-config") {
      config_line = value;
      return meta;
    }
    meta[key] = value;
  }
}

void read_chain(Reader& r, const std::string& config_line, LinearChainModel& chain) {
  for (const auto w : words(config_line)) {
    const auto eq = w.find('=');
    if (eq == std::string_view::npos) r.fail("bad features-config entry");
    const auto key = w.substr(0, eq);
    const auto val = w.substr(eq + 1);
    auto& fc = chain.feature_config;
    if (key == "window") {
      fc.window = r.number<int>(val);
    } else if (key == "max_affix") {
      fc.max_affix = r.number<std::size_t>(val);
    } else if (key == "context_shapes") {
      fc.context_shapes = r.number<int>(val) != 0;
    } else if (key == "use_pos") {
      fc.use_pos = r.number<int>(val) != 0;
    } else if (key == "use_chunk") {
      fc.use_chunk = r.number<int>(val) != 0;
    } else {
      r.fail("unknown features-config key '" + std::string(key) + "'");
    }
  }

  const auto n_labels = r.number<std::size_t>(r.keyed("labels"));
  std::vector<NerTag> tags;
  for (std::size_t i = 0; i < n_labels; ++i) {
    const auto s = r.line();
    auto tag = parse_tag(s);
    if (!tag) r.fail("bad label '" + s + "'");
    tags.push_back(std::move(*tag));
  }
  try {
    chain.labels = LabelSet(std::move(tags));
  } catch (const Error& e) {
    r.fail(e.what());
  }

  const auto n_features = r.number<std::size_t>(r.keyed("features"));
  for (std::size_t i = 0; i < n_features; ++i) {
    const auto s = r.line();
    if (chain.features.add(s) != i) r.fail("duplicate feature '" + s + "'");
  }
  chain.features.freeze();

  const auto layout = chain.layout();
  const std::size_t L = layout.labels;
  chain.weights.assign(layout.size(), 0.0);
  const auto nnz = r.number<std::size_t>(r.keyed("weights"));
  for (std::size_t k = 0; k < nnz; ++k) {
    const auto s = r.line();
    const auto w = words(s);
    auto index = [&](std::string_view v, std::size_t bound) {
      const auto i = r.number<std::size_t>(v);
      if (i >= bound) r.fail("index out of range");
      return i;
    };
    if (w.size() == 4 && w[0] == "e") {
      chain.weights[layout.emission(index(w[1], layout.features), index(w[2], L))] = r.number<double>(w[3]);
    } else if (w.size() == 4 && w[0] == "t") {
      chain.weights[layout.pair(index(w[1], L), index(w[2], L))] = r.number<double>(w[3]);
    } else if (w.size() == 3 && w[0] == "b") {
      chain.weights[layout.begin_offset() + index(w[1], L)] = r.number<double>(w[2]);
    } else if (w.size() == 3 && w[0] == "z") {
      chain.weights[layout.end_offset() + index(w[1], L)] = r.number<double>(w[2]);
    } else {
      r.fail("bad weight entry");
    }
  }
  for (double v : chain.weights) {
    if (!std::isfinite(v)) r.fail("non-finite weight");
  }
  if (r.line() != "end") r.fail("expected 'end'");
}

std::string read_kind(Reader& r) {
  const auto header_line = r.line();
  const auto header = words(header_line);
  if (header.size() != 2 || header[0] != kMagic) r.fail("not a textanon model file");
  if (r.number<int>(header[1]) != kVersion) r.fail("unsupported model version");
  return r.keyed("kind");
}

std::string join_numbers(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out.push_back(' ');
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += format_double(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

CrfModel read_crf_body(Reader& r) {
  CrfModel m;
  std::string config_line;
  auto meta = read_meta(r, config_line);
  auto get = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) r.fail("missing '" + key + "'");
    return it->second;
  };
  m.l2 = r.number<double>(get("l2"));
  m.meta.iterations = r.number<std::size_t>(get("iterations"));
  m.meta.final_objective = r.number<double>(get("objective"));
  m.meta.converged = r.number<int>(get("converged")) != 0;
  m.meta.status = get("status");
  const auto trace = get("trace");
  for (const auto w : words(trace)) m.meta.trace.push_back(r.number<double>(w));
  read_chain(r, config_line, m.chain);
  return m;
}

PerceptronModel read_perceptron_body(Reader& r) {
  PerceptronModel m;
  std::string config_line;
  auto meta = read_meta(r, config_line);
  auto get = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) r.fail("missing '" + key + "'");
    return it->second;
  };
  m.meta.epochs = r.number<std::size_t>(get("epochs"));
  m.meta.steps = r.number<std::size_t>(get("steps"));
  m.meta.updates = r.number<std::size_t>(get("updates"));
  const auto mistakes = get("mistakes");
  for (const auto w : words(mistakes)) m.meta.mistakes_per_epoch.push_back(r.number<std::size_t>(w));
  read_chain(r, config_line, m.chain);
  return m;
}

}  // namespace

void save_model(std::ostream& out, const CrfModel& model) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind crf\n";
  out << "l2 " << format_double(model.l2) << '\n';
  out << "iterations " << model.meta.iterations << '\n';
  out << "objective " << format_double(model.meta.final_objective) << '\n';
  out << "converged " << (model.meta.converged ? 1 : 0) << '\n';
  out << "status " << model.meta.status << '\n';
  out << "trace " << join_numbers(model.meta.trace) << '\n';
  write_chain(out, model.chain);
}

void save_model(std::ostream& out, const PerceptronModel& model) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind perceptron\n";
  out << "epochs " << model.meta.epochs << '\n';
  out << "steps " << model.meta.steps << '\n';
  out << "updates " << model.meta.updates << '\n';
  out << "mistakes " << join_numbers(model.meta.mistakes_per_epoch) << '\n';
  write_chain(out, model.chain);
}

AnyModel load_model(std::istream& in) {
  Reader r(in);
  const auto kind = read_kind(r);
  if (kind == "crf") return read_crf_body(r);
  if (kind == "perceptron") return read_perceptron_body(r);
  r.fail("unknown model kind '" + kind + "'");
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open model '" + path.string() + "'");
  return load_model(in);
}

CrfModel load_crf(std::istream& in) {
  auto m = load_model(in);
  if (auto* crf = std::get_if<CrfModel>(&m)) return std::move(*crf);
  throw LoadError("model file holds a perceptron, expected a crf");
}

PerceptronModel load_perceptron(std::istream& in) {
  auto m = load_model(in);
  if (auto* p = std::get_if<PerceptronModel>(&m)) return std::move(*p);
  throw LoadError("model file holds a crf, expected a perceptron");
}

void save_model_file(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write model '" + path.string() + "'");
  std::visit([&](const auto& m) { save_model(out, m); }, model);
  if (!out) throw LoadError("failed writing model '" + path.string() + "'");
}

}  // namespace textanon
