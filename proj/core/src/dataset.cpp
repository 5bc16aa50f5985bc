#include "distcl/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "distcl/csv.hpp"
#include "distcl/num_format.hpp"

namespace distcl {

using nlohmann::json;

void Dataset::validate() const {
  if (rows() < 1) throw std::invalid_argument("dataset: empty (N = 0)");
  if (dims() < 1) throw std::invalid_argument("dataset: no feature columns");
  if (static_cast<int>(column_names.size()) != dims())
    throw std::invalid_argument("dataset: column_names size mismatch");
  if (targets.size() != features.rows())
    throw std::invalid_argument("dataset: target length mismatch");
  if (!features.allFinite() || !targets.allFinite())
    throw std::invalid_argument("dataset: non-finite values present");
  for (int c : decision_columns)
    if (c < 0 || c >= dims())
      throw std::invalid_argument("dataset: decision column index " +
                                  std::to_string(c) + " out of range");
}

Dataset load_dataset(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream sf(sidecar_path);
  if (!sf) throw std::runtime_error("cannot open dataset sidecar: " + sidecar_path);
  json side;
  try {
    sf >> side;
  } catch (const json::exception& e) {
    throw std::runtime_error(sidecar_path + ": invalid JSON: " + e.what());
  }
  if (!side.contains("target"))
    throw std::runtime_error(sidecar_path + ": missing \"target\"");
  std::string target = side.at("target").get<std::string>();
  std::vector<std::string> decisions;
  if (side.contains("decision_columns"))
    decisions = side.at("decision_columns").get<std::vector<std::string>>();

  CsvTable t = read_csv(csv_path);
  int target_col = t.column(target);
  if (target_col < 0)
    throw std::runtime_error(csv_path + ": target column '" + target + "' not found");

  Dataset ds;
  ds.target_name = target;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (static_cast<int>(i) != target_col) ds.column_names.push_back(t.header[i]);

  const int n = static_cast<int>(t.rows.size());
  const int d = static_cast<int>(ds.column_names.size());
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (int r = 0; r < n; ++r) {
    int fc = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      double v;
      if (!parse_double(t.rows[r][c], v))
        throw std::runtime_error(csv_path + ": row " + std::to_string(r + 2) +
                                 ", column '" + t.header[c] + "': not a number: '" +
                                 t.rows[r][c] + "'");
      if (static_cast<int>(c) == target_col)
        ds.targets(r) = v;
      else
        ds.features(r, fc++) = v;
    }
  }

  for (const auto& name : decisions) {
    int idx = -1;
    for (int i = 0; i < d; ++i)
      if (ds.column_names[i] == name) idx = i;
    if (idx < 0)
      throw std::runtime_error(sidecar_path + ": decision column '" + name +
                               "' not in dataset");
    ds.decision_columns.push_back(idx);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::string& csv_path, const std::string& sidecar_path,
                  const Dataset& data) {
  data.validate();
  CsvTable t;
  t.header = data.column_names;
  t.header.push_back(data.target_name);
  t.rows.reserve(data.rows());
  for (int r = 0; r < data.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(data.dims() + 1);
    for (int c = 0; c < data.dims(); ++c) row.push_back(fmt_g17(data.features(r, c)));
    row.push_back(fmt_g17(data.targets(r)));
    t.rows.push_back(std::move(row));
  }
  write_csv(csv_path, t);

  json side;
  side["target"] = data.target_name;
  std::vector<std::string> decisions;
  for (int c : data.decision_columns) decisions.push_back(data.column_names[c]);
  side["decision_columns"] = decisions;
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sidecar: " + sidecar_path);
  out << side.dump(2) << "\n";
}

}  // namespace distcl
