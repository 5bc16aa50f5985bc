#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace distcl {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_width x in_width
  Eigen::VectorXd biases;   // out_width
  int out_width() const { return static_cast<int>(weights.rows()); }
  int in_width() const { return static_cast<int>(weights.cols()); }
};

struct AffineHead {
  Eigen::RowVectorXd weights;  // 1 x last_hidden_width
  double bias = 0.0;
};

// Per-feature affine standardization applied before the first layer:
// scaled_i = (x_i - shift_i) / scale_i, scale_i > 0.
struct InputScaler {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;
};

// Dense feed-forward network with ReLU hidden layers and two heads: an
// affine mu head and a ReLU-plus-floor sigma head, so that predicted
// sigma = max(raw, 0) + sigma_floor >= sigma_floor > 0 stays MILP
// representable.
struct Network {
  int input_dim = 0;
  InputScaler input_scaler;
  std::vector<DenseLayer> layers;  // hidden layers only, all ReLU
  AffineHead mu_head;
  AffineHead sigma_head;
  double sigma_floor = 1e-3;

  int hidden_layer_count() const { return static_cast<int>(layers.size()); }
  int last_hidden_width() const { return layers.back().out_width(); }
  long parameter_count() const;

  // Throws std::invalid_argument on any structural violation: dimension
  // chain breaks, non-finite entries, non-positive scaler scales or floor.
  void validate() const;
};

struct DistOutput {
  double mu = 0.0;
  double sigma = 0.0;
};

// Full per-layer forward record; used by the embedding bound checks and the
// training backward pass.
struct ForwardTrace {
  Eigen::VectorXd scaled;
  std::vector<Eigen::VectorXd> pre;   // per layer, pre-activation
  std::vector<Eigen::VectorXd> post;  // per layer, ReLU output
  double mu = 0.0;
  double sigma_pre = 0.0;  // affine sigma head output before ReLU
  double sigma = 0.0;
};

DistOutput forward(const Network& net, std::span<const double> input);
DistOutput forward(const Network& net, const Eigen::VectorXd& input);
ForwardTrace forward_trace(const Network& net, const Eigen::VectorXd& input);

// One-sample Gaussian negative log likelihood 0.5*(log sigma^2 + (y-mu)^2/sigma^2).
// Throws std::invalid_argument when sigma <= 0.
double gaussian_nll(double y, double mu, double sigma);

// Versioned text format "DISTCL-NET v1"; decimal values carry 17 significant
// digits so load(save(net)) reproduces the network bit-exactly.
void save_network(const std::string& path, const Network& net);
std::string network_to_string(const Network& net);
Network load_network(const std::string& path);
Network network_from_string(const std::string& text, const std::string& origin = "<string>");

}  // namespace distcl
