#include "vgai/nn/checkpoint.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace vgai::nn {

namespace {

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw std::runtime_error("checkpoint: expected '" + word + "', got '" + got + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

void write_network(std::ostream& out, const std::string& name, const Sequential& net) {
  out << "vgai-network 1\n";
  out << "name " << (name.empty() ? "-" : name) << "\n";
  const auto specs = net.specs();
  out << "layers " << specs.size() << "\n";
  for (const auto& s : specs) {
    out << to_string(s.kind) << ' ' << s.in << ' ' << s.out << ' ' << s.kernel << ' ' << s.stride_h << ' '
        << s.stride_w << ' ' << s.padding << "\n";
  }
  const auto params = net.params();
  out << "params " << params.size() << "\n";
  std::size_t total = 0;
  for (const Param* p : params) {
    out << p->name << ' ' << p->value.rank();
    for (int d : p->value.shape()) out << ' ' << d;
    out << "\n";
    total += p->value.size();
  }
  out << "values " << total << "\n";
  for (const Param* p : params) {
    for (double v : p->value.values()) out << format_double(v) << "\n";
  }
  out << "end\n";
}

Sequential read_network(std::istream& in, std::string* name) {
  expect(in, "vgai-network");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("checkpoint: unsupported network version");
  expect(in, "name");
  std::string net_name;
  in >> net_name;
  if (name) *name = net_name == "-" ? std::string() : net_name;

  expect(in, "layers");
  std::size_t n_layers = 0;
  in >> n_layers;
  std::vector<LayerSpec> specs(n_layers);
  for (auto& s : specs) {
    std::string kind;
    in >> kind >> s.in >> s.out >> s.kernel >> s.stride_h >> s.stride_w >> s.padding;
    if (!in) throw std::runtime_error("checkpoint: truncated layer spec");
    s.kind = parse_layer_kind(kind);
  }
  Sequential net(specs);

  expect(in, "params");
  std::size_t n_params = 0;
  in >> n_params;
  auto params = net.params();
  if (n_params != params.size()) throw std::runtime_error("checkpoint: parameter count does not match layers");
  for (Param* p : params) {
    std::string pname;
    int rank = 0;
    in >> pname >> rank;
    std::vector<int> shape(static_cast<std::size_t>(rank));
    for (int& d : shape) in >> d;
    if (!in || shape != p->value.shape()) throw std::runtime_error("checkpoint: parameter shape mismatch for " + pname);
  }
  expect(in, "values");
  std::size_t total = 0;
  in >> total;
  for (Param* p : params) {
    for (double& v : p->value.values()) {
      std::string tok;
      if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated values");
      v = parse_double(tok);
    }
    p->zero_grad();
  }
  expect(in, "end");
  return net;
}

}  // namespace vgai::nn
