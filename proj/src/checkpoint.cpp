#include "fsmgfn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fsmgfn/errors.hpp"

namespace fsmgfn {

namespace {

constexpr const char* kMagic = "fsmgfn-policy";

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hex(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw FormatError("bad number '" + tok + "'");
  return v;
}

void write_matrix(std::ostream& out, const char* name, const std::vector<double>& v,
                  std::size_t rows, std::size_t cols) {
  out << name << ' ' << rows << ' ' << cols << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out << (c ? " " : "") << hex(v[r * cols + c]);
    out << '\n';
  }
}

void write_vector(std::ostream& out, const char* name, const std::vector<double>& v) {
  out << name << ' ' << v.size() << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << hex(v[i]);
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("checkpoint truncated");
    return w;
  }
  void expect(const std::string& w) {
    auto got = word();
    if (got != w) throw FormatError("checkpoint: expected '" + w + "', found '" + got + "'");
  }
  std::size_t count() {
    auto w = word();
    char* end = nullptr;
    const auto v = std::strtoull(w.c_str(), &end, 10);
    if (end == w.c_str() || *end != '\0') throw FormatError("checkpoint: bad count '" + w + "'");
    return static_cast<std::size_t>(v);
  }
  std::vector<std::string> names(const std::string& key) {
    expect(key);
    std::vector<std::string> out(count());
    for (auto& n : out) n = word();
    return out;
  }
  std::vector<double> matrix(const std::string& key, std::size_t rows, std::size_t cols) {
    expect(key);
    if (count() != rows || count() != cols)
      throw FormatError("checkpoint: " + key + " has unexpected shape");
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = parse_hex(word());
    return v;
  }
  std::vector<double> vec(const std::string& key, std::size_t n) {
    expect(key);
    if (count() != n) throw FormatError("checkpoint: " + key + " has unexpected length");
    std::vector<double> v(n);
    for (auto& x : v) x = parse_hex(word());
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void Checkpoint::check_compatible(const FsmSpec& fsm) const {
  std::vector<std::string> s, a;
  for (const auto& x : fsm.states()) s.push_back(x.name);
  for (const auto& x : fsm.actions()) a.push_back(x.name);
  if (s != states || a != actions)
    throw SemanticError("checkpoint was trained on a machine with a different state/action order");
  if (params.num_states() != s.size() || params.num_actions() != a.size())
    throw SemanticError("checkpoint parameter shapes do not match the machine");
}

Checkpoint make_checkpoint(const FsmSpec& fsm, const PolicyParams& params, std::size_t t_max) {
  Checkpoint c;
  for (const auto& x : fsm.states()) c.states.push_back(x.name);
  for (const auto& x : fsm.actions()) c.actions.push_back(x.name);
  c.t_max = t_max;
  c.params = params;
  c.check_compatible(fsm);
  return c;
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  const auto& p = c.params;
  out << kMagic << ' ' << Checkpoint::kFormatVersion << '\n';
  out << "states " << c.states.size();
  for (const auto& s : c.states) out << ' ' << s;
  out << "\nactions " << c.actions.size();
  for (const auto& a : c.actions) out << ' ' << a;
  out << "\nhidden " << p.hidden << "\nt_max " << c.t_max << '\n';
  write_matrix(out, "w1", p.w1, p.hidden, p.inputs);
  write_vector(out, "b1", p.b1);
  write_matrix(out, "w2", p.w2, p.outputs, p.hidden);
  write_vector(out, "b2", p.b2);
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, c);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  if (const auto v = r.count(); v != Checkpoint::kFormatVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(v));
  Checkpoint c;
  c.states = r.names("states");
  c.actions = r.names("actions");
  r.expect("hidden");
  const auto hidden = r.count();
  r.expect("t_max");
  c.t_max = r.count();
  if (c.states.empty() || hidden == 0 || c.t_max == 0)
    throw FormatError("checkpoint has empty dimensions");
  auto& p = c.params;
  p = PolicyParams::zeros(c.states.size(), c.actions.size(), hidden);
  p.w1 = r.matrix("w1", p.hidden, p.inputs);
  p.b1 = r.vec("b1", p.hidden);
  p.w2 = r.matrix("w2", p.outputs, p.hidden);
  p.b2 = r.vec("b2", p.outputs);
  return c;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace fsmgfn
