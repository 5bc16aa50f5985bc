#include "distcl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "distcl/rng.hpp"

namespace distcl {

namespace {

// Gradients (and Adam moments) share the network's parameter shapes.
struct ParamSet {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  Eigen::RowVectorXd mu_w, sig_w;
  double mu_b = 0.0, sig_b = 0.0;

  static ParamSet zeros_like(const Network& net) {
    ParamSet p;
    for (const auto& l : net.layers) {
      p.w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      p.b.push_back(Eigen::VectorXd::Zero(l.biases.size()));
    }
    p.mu_w = Eigen::RowVectorXd::Zero(net.mu_head.weights.size());
    p.sig_w = Eigen::RowVectorXd::Zero(net.sigma_head.weights.size());
    return p;
  }
};

struct BatchForward {
  std::vector<Eigen::MatrixXd> pre;   // per layer: B x width
  std::vector<Eigen::MatrixXd> post;  // per layer: B x width
  Eigen::VectorXd mu, sigma_pre, sigma;
};

// rows of `xs` are already standardized inputs.
BatchForward batch_forward(const Network& net, const Eigen::MatrixXd& xs) {
  BatchForward f;
  const Eigen::MatrixXd* cur = &xs;
  for (const auto& l : net.layers) {
    f.pre.push_back(((*cur) * l.weights.transpose()).rowwise() + l.biases.transpose());
    f.post.push_back(f.pre.back().cwiseMax(0.0));
    cur = &f.post.back();
  }
  f.mu = (*cur) * net.mu_head.weights.transpose();
  f.mu.array() += net.mu_head.bias;
  f.sigma_pre = (*cur) * net.sigma_head.weights.transpose();
  f.sigma_pre.array() += net.sigma_head.bias;
  f.sigma = f.sigma_pre.cwiseMax(0.0).array() + net.sigma_floor;
  return f;
}

double batch_loss(const BatchForward& f, const Eigen::VectorXd& y) {
  Eigen::ArrayXd r = y.array() - f.mu.array();
  Eigen::ArrayXd s2 = f.sigma.array().square();
  return 0.5 * (s2.log() + r.square() / s2).mean();
}

// Mean NLL over the batch with gradients accumulated into `g`.
double batch_backward(const Network& net, const Eigen::MatrixXd& xs,
                      const Eigen::VectorXd& y, ParamSet& g) {
  const int batch = static_cast<int>(xs.rows());
  BatchForward f = batch_forward(net, xs);
  double loss = batch_loss(f, y);

  Eigen::ArrayXd r = f.mu.array() - y.array();
  Eigen::ArrayXd s = f.sigma.array();
  Eigen::VectorXd d_mu = (r / s.square()).matrix() / batch;
  Eigen::ArrayXd d_sigma = (1.0 / s - r.square() / s.cube()) / batch;
  Eigen::VectorXd d_spre =
      (d_sigma * (f.sigma_pre.array() > 0.0).cast<double>()).matrix();

  const Eigen::MatrixXd& last = f.post.back();
  g.mu_w = d_mu.transpose() * last;
  g.mu_b = d_mu.sum();
  g.sig_w = d_spre.transpose() * last;
  g.sig_b = d_spre.sum();

  Eigen::MatrixXd d_h = d_mu * net.mu_head.weights + d_spre * net.sigma_head.weights;
  for (int l = net.hidden_layer_count() - 1; l >= 0; --l) {
    Eigen::MatrixXd d_pre =
        d_h.cwiseProduct((f.pre[l].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& inputs = (l == 0) ? xs : f.post[l - 1];
    g.w[l] = d_pre.transpose() * inputs;
    g.b[l] = d_pre.colwise().sum().transpose();
    if (l > 0) d_h = d_pre * net.layers[l].weights;
  }
  return loss;
}

void adam_update(Eigen::Ref<Eigen::MatrixXd> p, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::MatrixXd& g,
                 const TrainConfig& c, double bc1, double bc2) {
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
  v = c.adam_beta2 * v.array().matrix() + (1.0 - c.adam_beta2) * g.cwiseProduct(g);
  p -= (c.learning_rate * (m / bc1).array() / ((v / bc2).array().sqrt() + c.adam_eps))
           .matrix();
}

void adam_update_scalar(double& p, double& m, double& v, double g,
                        const TrainConfig& c, double bc1, double bc2) {
  m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
  v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g * g;
  p -= c.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + c.adam_eps);
}

Network init_network(const Dataset& data, const std::vector<int>& train_idx,
                     const TrainConfig& cfg, Rng& rng) {
  const int d = data.dims();
  Network net;
  net.input_dim = d;
  net.sigma_floor = cfg.sigma_floor;

  // z-score scaler fit on the training split only
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int i : train_idx) mean += data.features.row(i).transpose();
  mean /= static_cast<double>(train_idx.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (int i : train_idx) {
    Eigen::VectorXd c = data.features.row(i).transpose() - mean;
    var += c.cwiseProduct(c);
  }
  var /= static_cast<double>(train_idx.size());
  net.input_scaler.shift = mean;
  net.input_scaler.scale = var.cwiseSqrt().cwiseMax(1e-8);

  double y_mean = 0.0, y_var = 0.0;
  for (int i : train_idx) y_mean += data.targets(i);
  y_mean /= static_cast<double>(train_idx.size());
  for (int i : train_idx) {
    double c = data.targets(i) - y_mean;
    y_var += c * c;
  }
  y_var /= static_cast<double>(train_idx.size());
  double y_std = std::max(std::sqrt(y_var), cfg.sigma_floor);

  int prev = d;
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    DenseLayer layer;
    double lim = std::sqrt(6.0 / prev);  // He-uniform for ReLU
    layer.weights.resize(cfg.hidden_width, prev);
    for (int r = 0; r < cfg.hidden_width; ++r)
      for (int c = 0; c < prev; ++c) layer.weights(r, c) = rng.uniform(-lim, lim);
    layer.biases = Eigen::VectorXd::Zero(cfg.hidden_width);
    net.layers.push_back(std::move(layer));
    prev = cfg.hidden_width;
  }
  double lim = std::sqrt(6.0 / prev);
  net.mu_head.weights.resize(prev);
  net.sigma_head.weights.resize(prev);
  for (int c = 0; c < prev; ++c) net.mu_head.weights(c) = rng.uniform(-lim, lim);
  for (int c = 0; c < prev; ++c) net.sigma_head.weights(c) = 0.1 * rng.uniform(-lim, lim);
  // Heads start at the marginal fit: mu at the target mean, sigma at the
  // target std (keeps the sigma pre-activation away from the ReLU kink).
  net.mu_head.bias = y_mean;
  net.sigma_head.bias = y_std;
  return net;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  if (cfg.hidden_layers < 1 || cfg.hidden_width < 1)
    throw std::invalid_argument("train: hidden layout must be at least 1x1");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
    throw std::invalid_argument("train: val_fraction must be in [0, 1)");

  auto t0 = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);

  const int n = data.rows();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  int n_val = static_cast<int>(std::lround(cfg.val_fraction * n));
  n_val = std::min(n_val, n - 1);
  std::vector<int> val_idx(idx.begin(), idx.begin() + n_val);
  std::vector<int> train_idx(idx.begin() + n_val, idx.end());
  if (val_idx.empty()) val_idx = train_idx;  // degenerate split: validate on train

  Network net = init_network(data, train_idx, cfg, rng);

  auto gather = [&](const std::vector<int>& rows) {
    Eigen::MatrixXd x(rows.size(), data.dims());
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<long>(i)) = data.features.row(rows[i]);
      y(static_cast<long>(i)) = data.targets(rows[i]);
    }
    return std::make_pair(x, y);
  };
  auto scale_rows = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return (x.rowwise() - net.input_scaler.shift.transpose())
        .array()
        .rowwise() /
        net.input_scaler.scale.transpose().array();
  };

  auto [train_x_raw, train_y] = gather(train_idx);
  auto [val_x_raw, val_y] = gather(val_idx);
  Eigen::MatrixXd train_xs = scale_rows(train_x_raw);
  Eigen::MatrixXd val_xs = scale_rows(val_x_raw);

  ParamSet m = ParamSet::zeros_like(net), v = ParamSet::zeros_like(net);
  double m_mu_b = 0, v_mu_b = 0, m_sig_b = 0, v_sig_b = 0;
  long step = 0;

  TrainingReport report;
  report.model_name = cfg.model_name();
  report.train_rows = static_cast<int>(train_idx.size());
  report.val_rows = static_cast<int>(val_idx.size());
  Network best = net;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<int> order(train_idx.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(start + cfg.batch_size, order.size());
      Eigen::MatrixXd bx(stop - start, data.dims());
      Eigen::VectorXd by(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        bx.row(static_cast<long>(i - start)) = train_xs.row(order[i]);
        by(static_cast<long>(i - start)) = train_y(order[i]);
      }
      ParamSet g = ParamSet::zeros_like(net);
      double loss = batch_backward(net, bx, by, g);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + " (diverged)");
      ++step;
      double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (int l = 0; l < net.hidden_layer_count(); ++l) {
        adam_update(net.layers[l].weights, m.w[l], v.w[l], g.w[l], cfg, bc1, bc2);
        Eigen::MatrixXd gb = g.b[l], mb = m.b[l], vb = v.b[l], pb = net.layers[l].biases;
        adam_update(pb, mb, vb, gb, cfg, bc1, bc2);
        net.layers[l].biases = pb;
        m.b[l] = mb;
        v.b[l] = vb;
      }
      Eigen::MatrixXd gmw = g.mu_w, mmw = m.mu_w, vmw = v.mu_w, pmw = net.mu_head.weights;
      adam_update(pmw, mmw, vmw, gmw, cfg, bc1, bc2);
      net.mu_head.weights = pmw;
      m.mu_w = mmw;
      v.mu_w = vmw;
      Eigen::MatrixXd gsw = g.sig_w, msw = m.sig_w, vsw = v.sig_w, psw = net.sigma_head.weights;
      adam_update(psw, msw, vsw, gsw, cfg, bc1, bc2);
      net.sigma_head.weights = psw;
      m.sig_w = msw;
      v.sig_w = vsw;
      adam_update_scalar(net.mu_head.bias, m_mu_b, v_mu_b, g.mu_b, cfg, bc1, bc2);
      adam_update_scalar(net.sigma_head.bias, m_sig_b, v_sig_b, g.sig_b, cfg, bc1, bc2);
    }

    EpochStats es;
    es.train_loss = batch_loss(batch_forward(net, train_xs), train_y);
    es.val_loss = batch_loss(batch_forward(net, val_xs), val_y);
    if (!std::isfinite(es.train_loss) || !std::isfinite(es.val_loss))
      throw std::runtime_error("train: non-finite loss at epoch " +
                               std::to_string(epoch + 1) + " (diverged)");
    report.epochs.push_back(es);
    if (es.val_loss < best_val) {  // ties keep the earliest epoch
      best_val = es.val_loss;
      best = net;
      report.best_epoch = epoch;
    }
  }

  report.best_val_loss = best_val;
  report.fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return TrainResult{std::move(best), std::move(report)};
}

GradCheckReport gradient_check(const Network& net_in, const Dataset& data, double tolerance) {
  data.validate();
  net_in.validate();
  if (net_in.parameter_count() > 200)
    throw std::invalid_argument("gradient_check: network has " +
                                std::to_string(net_in.parameter_count()) +
                                " parameters, limit is 200");
  Network net = net_in;

  Eigen::MatrixXd xs = (data.features.rowwise() - net.input_scaler.shift.transpose())
                           .array()
                           .rowwise() /
                       net.input_scaler.scale.transpose().array();
  const Eigen::VectorXd& y = data.targets;

  ParamSet g = ParamSet::zeros_like(net);
  batch_backward(net, xs, y, g);

  // Flat parameter/gradient views in a fixed canonical order.
  std::vector<std::pair<double*, double>> entries;  // (param ptr, analytic grad)
  for (int l = 0; l < net.hidden_layer_count(); ++l) {
    for (long i = 0; i < net.layers[l].weights.size(); ++i)
      entries.push_back({net.layers[l].weights.data() + i, g.w[l].data()[i]});
    for (long i = 0; i < net.layers[l].biases.size(); ++i)
      entries.push_back({net.layers[l].biases.data() + i, g.b[l].data()[i]});
  }
  for (long i = 0; i < net.mu_head.weights.size(); ++i)
    entries.push_back({net.mu_head.weights.data() + i, g.mu_w.data()[i]});
  entries.push_back({&net.mu_head.bias, g.mu_b});
  for (long i = 0; i < net.sigma_head.weights.size(); ++i)
    entries.push_back({net.sigma_head.weights.data() + i, g.sig_w.data()[i]});
  entries.push_back({&net.sigma_head.bias, g.sig_b});

  const double h = 1e-5;
  GradCheckReport rep;
  rep.tolerance = tolerance;
  rep.parameters = static_cast<long>(entries.size());
  rep.samples = data.rows();
  for (auto& [ptr, analytic] : entries) {
    double saved = *ptr;
    *ptr = saved + h;
    double lp = batch_loss(batch_forward(net, xs), y);
    *ptr = saved - h;
    double lm = batch_loss(batch_forward(net, xs), y);
    *ptr = saved;
    double numeric = (lp - lm) / (2.0 * h);
    double rel = std::abs(analytic - numeric) /
                 std::max({std::abs(analytic), std::abs(numeric), 1.0});
    rep.max_rel_error = std::max(rep.max_rel_error, rel);
  }
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace distcl
