#include "varinfer/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "varinfer/errors.hpp"

namespace varinfer {

namespace {

constexpr int kFormatVersion = 1;

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ArgumentError(std::string("checkpoint: failed to read ") + what);
  return v;
}

double read_double(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ArgumentError("checkpoint: truncated parameter list");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) throw ArgumentError("checkpoint: bad number '" + token + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect_token(std::istream& in, const std::string& expected) {
  std::string token;
  if (!(in >> token) || token != expected) {
    throw ArgumentError("checkpoint: expected '" + expected + "', found '" + token + "'");
  }
}

void write_network(std::ostream& out, const Network& net) {
  out << "varinfer-network " << kFormatVersion << '\n';
  out << "layers " << net.depth() << '\n';
  for (const Layer& layer : net.layers()) {
    out << "layer " << layer.input_dim() << ' ' << layer.output_dim() << ' ' << activation_name(layer.activation)
        << '\n';
    out << "weights";
    for (double w : layer.weights.data()) out << ' ' << format_double(w);
    out << "\nbias";
    for (double b : layer.bias) out << ' ' << format_double(b);
    out << '\n';
  }
}

Network read_network(std::istream& in) {
  expect_token(in, "varinfer-network");
  if (read_value<int>(in, "format version") != kFormatVersion) {
    throw ArgumentError("checkpoint: unsupported network format version");
  }
  expect_token(in, "layers");
  const auto count = read_value<std::size_t>(in, "layer count");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    expect_token(in, "layer");
    const auto rows = read_value<std::size_t>(in, "layer input dim");
    const auto cols = read_value<std::size_t>(in, "layer output dim");
    const auto act = read_value<std::string>(in, "activation");
    Layer layer{Matrix(rows, cols), std::vector<double>(cols), parse_activation(act)};
    expect_token(in, "weights");
    for (double& w : layer.weights.data()) w = read_double(in);
    expect_token(in, "bias");
    for (double& b : layer.bias) b = read_double(in);
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

}  // namespace varinfer
