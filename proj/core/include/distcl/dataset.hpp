#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace distcl {

// Supervised table: features hold both decision columns x and context
// columns theta; decision_columns marks which feature indices are decisions.
struct Dataset {
  Eigen::MatrixXd features;               // N x d
  Eigen::VectorXd targets;                // N
  std::vector<std::string> column_names;  // d feature names
  std::string target_name;
  std::vector<int> decision_columns;

  int rows() const { return static_cast<int>(features.rows()); }
  int dims() const { return static_cast<int>(features.cols()); }

  // Throws on: empty, NaN/Inf cells, decision index out of range.
  void validate() const;
};

// CSV with a header row plus a JSON sidecar naming the target column and the
// decision columns, e.g. {"target": "demand", "decision_columns": ["price"]}.
Dataset load_dataset(const std::string& csv_path, const std::string& sidecar_path);
void save_dataset(const std::string& csv_path, const std::string& sidecar_path,
                  const Dataset& data);

}  // namespace distcl
