#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distcl/dataset.hpp"
#include "distcl/network.hpp"

namespace distcl {

struct TrainConfig {
  int hidden_layers = 1;   // l in "DNN(l,n)"
  int hidden_width = 20;   // n in "DNN(l,n)"
  int epochs = 5000;
  double learning_rate = 1e-3;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  double sigma_floor = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::string model_name() const {
    return "DNN(" + std::to_string(hidden_layers) + "," + std::to_string(hidden_width) + ")";
  }
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // earliest epoch attaining the best validation loss
  double best_val_loss = 0.0;
  double fit_seconds = 0.0;
  std::string model_name;
  int train_rows = 0;
  int val_rows = 0;
};

struct TrainResult {
  Network network;  // snapshot at best_epoch
  TrainingReport report;
};

// Minimizes the empirical Gaussian NLL by mini-batch adaptive-moment gradient
// descent. Deterministic given the seed. Throws on an empty dataset and on a
// non-finite loss, naming the epoch.
TrainResult train(const Dataset& data, const TrainConfig& config);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  long parameters = 0;
  int samples = 0;
};

// Compares the analytic full-batch gradient with central finite differences
// (step 1e-5) across every parameter. Report-only; requires <= 200 parameters.
GradCheckReport gradient_check(const Network& net, const Dataset& data, double tolerance);

}  // namespace distcl
