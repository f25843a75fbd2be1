#include "aqe/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "aqe/error.hpp"

namespace aqe {

namespace {

constexpr const char* kMagic = "aqe-model 1";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(line_ + 1, "unexpected end of checkpoint");
    ++line_;
    return line;
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::size_t to_size(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw ParseError(line, "expected an unsigned integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const ModelConfig& c = model.config;
  out << kMagic << '\n';
  out << "dim " << c.dim << '\n';
  out << "heads " << c.heads << '\n';
  out << "proj " << c.proj << '\n';
  out << "max_input_len " << c.max_input_len << '\n';
  out << "max_output_len " << c.max_output_len << '\n';
  out << "n_max " << c.n_max << '\n';
  out << "template " << template_kind_name(c.kind) << '\n';
  out << "mode " << train_mode_name(c.mode) << '\n';
  out << "vocab " << model.vocab.size() << '\n';
  for (const std::string& t : model.vocab.tokens()) out << t << '\n';
  model.params.visit([&out](const std::string& name, const Matrix& m) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << hex(row[k]);
      out << '\n';
    }
  });
  out << "end\n";
}

Model read_model(std::istream& in) {
  LineReader lines(in);
  if (lines.next() != kMagic) throw ParseError(1, "not an aqe model checkpoint");

  std::map<std::string, std::string> fields;
  for (const char* key : {"dim", "heads", "proj", "max_input_len", "max_output_len", "n_max",
                          "template", "mode"}) {
    std::istringstream ls(lines.next());
    std::string k, v;
    ls >> k >> v;
    if (k != key || v.empty()) throw ParseError(lines.line(), std::string("expected field '") + key + "'");
    fields[k] = v;
  }
  ModelConfig config;
  config.dim = to_size(fields["dim"], lines.line());
  config.heads = to_size(fields["heads"], lines.line());
  config.proj = to_size(fields["proj"], lines.line());
  config.max_input_len = to_size(fields["max_input_len"], lines.line());
  config.max_output_len = to_size(fields["max_output_len"], lines.line());
  config.n_max = static_cast<int>(to_size(fields["n_max"], lines.line()));
  const auto kind = template_kind_from_name(fields["template"]);
  if (!kind) throw ParseError(lines.line(), "unknown template kind '" + fields["template"] + "'");
  config.kind = *kind;
  const auto mode = train_mode_from_name(fields["mode"]);
  if (!mode) throw ParseError(lines.line(), "unknown mode '" + fields["mode"] + "'");
  config.mode = *mode;

  std::istringstream vs(lines.next());
  std::string tag, count;
  vs >> tag >> count;
  if (tag != "vocab") throw ParseError(lines.line(), "expected vocabulary size");
  const std::size_t n_tokens = to_size(count, lines.line());
  std::vector<std::string> tokens;
  tokens.reserve(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) tokens.push_back(lines.next());

  Model model;
  model.config = config;
  model.vocab = Vocabulary(std::move(tokens), config.n_max);
  model.target_vocab = DecoderVocab(config.n_max, config.kind);
  model.params = ModelParams(config, model.vocab.size(), model.target_vocab.size());
  model.params.visit([&lines](const std::string& name, Matrix& m) {
    std::istringstream hs(lines.next());
    std::string t, got;
    std::size_t rows = 0, cols = 0;
    hs >> t >> got >> rows >> cols;
    if (t != "tensor" || got != name) throw ParseError(lines.line(), "expected tensor " + name);
    if (rows != m.rows() || cols != m.cols()) throw ParseError(lines.line(), "shape mismatch for " + name);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string line = lines.next();
      const char* p = line.c_str();
      auto row = m.row(r);
      for (std::size_t k = 0; k < cols; ++k) {
        char* end = nullptr;
        row[k] = std::strtod(p, &end);
        if (end == p) throw ParseError(lines.line(), "bad value in " + name);
        p = end;
      }
    }
  });
  if (lines.next() != "end") throw ParseError(lines.line(), "trailing data in checkpoint");
  return model;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_model(out, model);
  if (!out) throw Error("failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return read_model(in);
}

}  // namespace aqe
