#include "distcl/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "distcl/num_format.hpp"

namespace distcl {

long Network::parameter_count() const {
  long n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  n += mu_head.weights.size() + 1;
  n += sigma_head.weights.size() + 1;
  return n;
}

void Network::validate() const {
  if (input_dim < 1) throw std::invalid_argument("network: input_dim < 1");
  if (layers.empty()) throw std::invalid_argument("network: no hidden layers");
  if (input_scaler.shift.size() != input_dim || input_scaler.scale.size() != input_dim)
    throw std::invalid_argument("network: scaler length != input_dim");
  if (!input_scaler.shift.allFinite() || !input_scaler.scale.allFinite())
    throw std::invalid_argument("network: non-finite scaler");
  for (int i = 0; i < input_dim; ++i)
    if (input_scaler.scale(i) <= 0.0)
      throw std::invalid_argument("network: scaler scale must be strictly positive (feature " +
                                  std::to_string(i) + ")");
  int prev = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.in_width() != prev)
      throw std::invalid_argument("network: layer " + std::to_string(l) +
                                  " expects input width " + std::to_string(layer.in_width()) +
                                  ", previous width is " + std::to_string(prev));
    if (layer.biases.size() != layer.out_width())
      throw std::invalid_argument("network: layer " + std::to_string(l) + " bias size mismatch");
    if (!layer.weights.allFinite() || !layer.biases.allFinite())
      throw std::invalid_argument("network: layer " + std::to_string(l) + " has non-finite entries");
    prev = layer.out_width();
  }
  if (mu_head.weights.size() != prev || sigma_head.weights.size() != prev)
    throw std::invalid_argument("network: head width != last hidden width");
  if (!mu_head.weights.allFinite() || !std::isfinite(mu_head.bias) ||
      !sigma_head.weights.allFinite() || !std::isfinite(sigma_head.bias))
    throw std::invalid_argument("network: non-finite head entries");
  if (!(sigma_floor > 0.0))
    throw std::invalid_argument("network: sigma_floor must be > 0");
}

ForwardTrace forward_trace(const Network& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(input.size()) +
                                " entries, network expects " + std::to_string(net.input_dim));
  ForwardTrace tr;
  tr.scaled = (input - net.input_scaler.shift).cwiseQuotient(net.input_scaler.scale);
  const Eigen::VectorXd* cur = &tr.scaled;
  tr.pre.reserve(net.layers.size());
  tr.post.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    tr.pre.push_back(layer.weights * (*cur) + layer.biases);
    tr.post.push_back(tr.pre.back().cwiseMax(0.0));
    cur = &tr.post.back();
  }
  tr.mu = net.mu_head.weights.dot(*cur) + net.mu_head.bias;
  tr.sigma_pre = net.sigma_head.weights.dot(*cur) + net.sigma_head.bias;
  tr.sigma = std::max(tr.sigma_pre, 0.0) + net.sigma_floor;
  return tr;
}

DistOutput forward(const Network& net, const Eigen::VectorXd& input) {
  ForwardTrace tr = forward_trace(net, input);
  return DistOutput{tr.mu, tr.sigma};
}

DistOutput forward(const Network& net, std::span<const double> input) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(input.data(),
                                                        static_cast<long>(input.size()));
  return forward(net, v);
}

double gaussian_nll(double y, double mu, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_nll: sigma must be > 0, got " + fmt_g17(sigma));
  double r = y - mu;
  return 0.5 * (std::log(sigma * sigma) + r * r / (sigma * sigma));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_vector(std::ostream& out, const char* tag, const Eigen::VectorXd& v) {
  out << tag;
  for (long i = 0; i < v.size(); ++i) out << ' ' << fmt_g17(v(i));
  out << '\n';
}

// Line-oriented reader with positional diagnostics.
class NetReader {
 public:
  NetReader(const std::string& text, std::string origin)
      : in_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(origin_ + ":" + std::to_string(lineno_) + ": " + msg);
  }

  // Next non-empty line split into tokens; fails naming `expected` at EOF.
  std::vector<std::string> next(const std::string& expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      std::istringstream ls(line);
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (!toks.empty()) return toks;
    }
    fail("unexpected end of file, expected section '" + expected + "'");
  }

  std::vector<std::string> expect(const std::string& tag, std::size_t values) {
    auto toks = next(tag);
    if (toks[0] != tag)
      fail("expected section '" + tag + "', found '" + toks[0] + "'");
    if (values != kAnyCount && toks.size() != values + 1)
      fail("section '" + tag + "': expected " + std::to_string(values) +
           " value(s), found " + std::to_string(toks.size() - 1));
    return toks;
  }

  double num(const std::string& tok, const std::string& where) {
    double v;
    if (!parse_double(tok, v)) fail(where + ": not a number: '" + tok + "'");
    return v;
  }

  long integer(const std::string& tok, const std::string& where) {
    double v = num(tok, where);
    long i = static_cast<long>(v);
    if (static_cast<double>(i) != v) fail(where + ": not an integer: '" + tok + "'");
    return i;
  }

  Eigen::VectorXd vec(const std::vector<std::string>& toks, const std::string& where) {
    Eigen::VectorXd v(static_cast<long>(toks.size()) - 1);
    for (std::size_t i = 1; i < toks.size(); ++i)
      v(static_cast<long>(i) - 1) = num(toks[i], where);
    return v;
  }

  static constexpr std::size_t kAnyCount = static_cast<std::size_t>(-1);

 private:
  std::istringstream in_;
  std::string origin_;
  int lineno_ = 0;
};

}  // namespace

std::string network_to_string(const Network& net) {
  net.validate();
  std::ostringstream out;
  out << "DISTCL-NET v1\n";
  out << "inputs " << net.input_dim << '\n';
  put_vector(out, "scaler_shift", net.input_scaler.shift);
  put_vector(out, "scaler_scale", net.input_scaler.scale);
  out << "hidden_layers " << net.hidden_layer_count() << '\n';
  for (int l = 0; l < net.hidden_layer_count(); ++l) {
    const auto& layer = net.layers[l];
    out << "layer " << l << ' ' << layer.out_width() << ' ' << layer.in_width() << '\n';
    for (int r = 0; r < layer.out_width(); ++r)
      put_vector(out, "w", layer.weights.row(r).transpose());
    put_vector(out, "b", layer.biases);
  }
  put_vector(out, "mu_head_w", net.mu_head.weights.transpose());
  out << "mu_head_b " << fmt_g17(net.mu_head.bias) << '\n';
  put_vector(out, "sigma_head_w", net.sigma_head.weights.transpose());
  out << "sigma_head_b " << fmt_g17(net.sigma_head.bias) << '\n';
  out << "sigma_floor " << fmt_g17(net.sigma_floor) << '\n';
  out << "end\n";
  return out.str();
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weights file: " + path);
  out << network_to_string(net);
}

Network network_from_string(const std::string& text, const std::string& origin) {
  NetReader rd(text, origin);

  auto header = rd.next("DISTCL-NET");
  if (header.size() != 2 || header[0] != "DISTCL-NET")
    rd.fail("not a DISTCL-NET weights file");
  if (header[1] != "v1")
    rd.fail("unsupported weights format version '" + header[1] + "', expected v1");

  Network net;
  auto inputs = rd.expect("inputs", 1);
  net.input_dim = static_cast<int>(rd.integer(inputs[1], "inputs"));
  if (net.input_dim < 1) rd.fail("inputs: must be >= 1");

  net.input_scaler.shift =
      rd.vec(rd.expect("scaler_shift", static_cast<std::size_t>(net.input_dim)), "scaler_shift");
  net.input_scaler.scale =
      rd.vec(rd.expect("scaler_scale", static_cast<std::size_t>(net.input_dim)), "scaler_scale");
  for (int i = 0; i < net.input_dim; ++i)
    if (!(net.input_scaler.scale(i) > 0.0))
      rd.fail("scaler_scale: entry " + std::to_string(i) + " must be > 0");

  auto hl = rd.expect("hidden_layers", 1);
  long n_layers = rd.integer(hl[1], "hidden_layers");
  if (n_layers < 1) rd.fail("hidden_layers: must be >= 1");

  int prev = net.input_dim;
  for (long l = 0; l < n_layers; ++l) {
    auto head = rd.expect("layer", 3);
    long idx = rd.integer(head[1], "layer");
    long out_w = rd.integer(head[2], "layer");
    long in_w = rd.integer(head[3], "layer");
    if (idx != l) rd.fail("layer: expected index " + std::to_string(l));
    if (in_w != prev)
      rd.fail("layer " + std::to_string(l) + ": input width " + std::to_string(in_w) +
              " does not match previous width " + std::to_string(prev));
    if (out_w < 1) rd.fail("layer: width must be >= 1");
    DenseLayer layer;
    layer.weights.resize(out_w, in_w);
    for (long r = 0; r < out_w; ++r) {
      auto row = rd.expect("w", static_cast<std::size_t>(in_w));
      layer.weights.row(r) = rd.vec(row, "w").transpose();
    }
    layer.biases = rd.vec(rd.expect("b", static_cast<std::size_t>(out_w)), "b");
    net.layers.push_back(std::move(layer));
    prev = static_cast<int>(out_w);
  }

  net.mu_head.weights =
      rd.vec(rd.expect("mu_head_w", static_cast<std::size_t>(prev)), "mu_head_w").transpose();
  net.mu_head.bias = rd.num(rd.expect("mu_head_b", 1)[1], "mu_head_b");
  net.sigma_head.weights =
      rd.vec(rd.expect("sigma_head_w", static_cast<std::size_t>(prev)), "sigma_head_w").transpose();
  net.sigma_head.bias = rd.num(rd.expect("sigma_head_b", 1)[1], "sigma_head_b");
  net.sigma_floor = rd.num(rd.expect("sigma_floor", 1)[1], "sigma_floor");
  rd.expect("end", 0);

  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  return net;
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weights file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return network_from_string(ss.str(), path);
}

}  // namespace distcl
