#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <vector>

#include "distcl/solver.hpp"

namespace distcl {

namespace {

struct Node {
  long id = 0;
  int parent = -1;
  int depth = 0;
  int branch_var = -1;
  double fixed_to = 0.0;  // 0 or 1
  double bound = 0.0;     // parent LP objective, internal (min) sense
};

struct QueueEntry {
  double bound;
  long id;
  int index;
  bool operator>(const QueueEntry& o) const {
    if (bound != o.bound) return bound > o.bound;
    return id > o.id;  // FIFO among equal bounds keeps exploration pinned
  }
};

}  // namespace

SolveResult solve_milp(const MilpModel& model, const MilpOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  SolveResult res;

  const int n = model.num_vars();
  std::vector<int> binaries;
  for (int j = 0; j < n; ++j)
    if (model.var(j).kind == VarKind::Binary) binaries.push_back(j);

  std::vector<double> base_lo(n), base_hi(n);
  for (int j = 0; j < n; ++j) {
    base_lo[j] = model.var(j).lower;
    base_hi[j] = model.var(j).upper;
  }

  const double internal_sign = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;

  std::vector<Node> nodes;
  nodes.push_back(Node{0, -1, 0, -1, 0.0, -kInf});
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;
  queue.push({-kInf, 0, 0});

  bool have_incumbent = false;
  double inc_obj_internal = kInf;
  std::vector<double> inc_x;
  long next_id = 1;

  auto materialize_bounds = [&](int index, std::vector<double>& lo, std::vector<double>& hi) {
    lo = base_lo;
    hi = base_hi;
    for (int k = index; k >= 0; k = nodes[k].parent) {
      const Node& nd = nodes[k];
      if (nd.branch_var < 0) continue;
      lo[nd.branch_var] = std::max(lo[nd.branch_var], nd.fixed_to);
      hi[nd.branch_var] = std::min(hi[nd.branch_var], nd.fixed_to);
    }
  };

  auto log_node = [&](const Node& nd, double bound_internal) {
    if (!options.node_log) return;
    double bound_ext = internal_sign * bound_internal;
    *options.node_log << nd.id << ',' << nd.depth << ',' << bound_ext << ',';
    if (have_incumbent)
      *options.node_log << internal_sign * inc_obj_internal;
    *options.node_log << '\n';
  };

  SolveStatus failure = SolveStatus::Optimal;
  bool root_unbounded = false;
  std::vector<double> lo, hi;

  while (!queue.empty()) {
    if (res.stats.nodes >= options.node_limit) {
      res.status = SolveStatus::NodeLimit;
      if (have_incumbent) {
        res.objective = internal_sign * inc_obj_internal;
        res.assignment = inc_x;
      }
      res.stats.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return res;
    }

    QueueEntry entry = queue.top();
    queue.pop();
    // prune by parent bound before paying for the LP
    if (have_incumbent && entry.bound >= inc_obj_internal - options.gap_abs) continue;

    const Node nd = nodes[entry.index];
    materialize_bounds(entry.index, lo, hi);
    LpResult lp = solve_lp(model, lo, hi, options.lp);
    res.stats.nodes += 1;
    res.stats.simplex_iterations += lp.iterations;

    if (lp.status == SolveStatus::Infeasible) {
      log_node(nd, entry.bound);
      continue;
    }
    if (lp.status == SolveStatus::Unbounded) {
      // bounds only shrink from the root, so this can only happen at the root
      root_unbounded = true;
      break;
    }
    if (lp.status != SolveStatus::Optimal) {
      failure = lp.status;
      break;
    }

    double node_bound = internal_sign * lp.objective;
    log_node(nd, node_bound);
    if (have_incumbent && node_bound >= inc_obj_internal - options.gap_abs) continue;

    // most fractional binary, ties by lowest variable id
    int branch = -1;
    double best_frac = -1.0;
    for (int j : binaries) {
      double v = lp.x[j];
      double dist = std::min(std::abs(v - std::round(v)), 0.5);
      if (dist > options.int_tol && dist > best_frac + 1e-12) {
        best_frac = dist;
        branch = j;
      }
    }

    if (branch < 0) {  // integral: candidate incumbent
      if (node_bound < inc_obj_internal - 1e-12) {
        inc_obj_internal = node_bound;
        inc_x = lp.x;
        have_incumbent = true;
      }
      continue;
    }

    for (double side : {1.0, 0.0}) {
      Node child;
      child.id = next_id++;
      child.parent = entry.index;
      child.depth = nd.depth + 1;
      child.branch_var = branch;
      child.fixed_to = side;
      child.bound = node_bound;
      nodes.push_back(child);
      queue.push({node_bound, child.id, static_cast<int>(nodes.size()) - 1});
    }
  }

  res.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (root_unbounded) {
    res.status = SolveStatus::Unbounded;
    return res;
  }
  if (failure != SolveStatus::Optimal) {
    res.status = failure;
    return res;
  }
  if (!have_incumbent) {
    res.status = SolveStatus::Infeasible;
    return res;
  }
  res.status = SolveStatus::Optimal;
  res.objective = internal_sign * inc_obj_internal;
  res.assignment = inc_x;
  return res;
}

}  // namespace distcl
