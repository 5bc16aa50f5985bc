#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "distcl/milp.hpp"

namespace distcl {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NodeLimit, IterLimit, Numerical };

const char* to_string(SolveStatus s);

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-10;
  long iter_limit = 0;      // 0: scale with problem size
  int refactor_every = 96;  // eta vectors between refactorizations
};

struct LpResult {
  SolveStatus status = SolveStatus::Numerical;
  double objective = 0.0;
  std::vector<double> x;  // structural variables only
  long iterations = 0;
};

// Primal bounded-variable simplex over the LP relaxation (binary vars are
// relaxed to their bounds). Dantzig pricing with a Bland fallback under
// degeneracy; statuses are certified by a fresh factorization before being
// reported, so a numerical failure is reported as such rather than as a
// wrong "optimal".
LpResult solve_lp(const MilpModel& model, const LpOptions& options = {});

// Same, with per-variable bound overrides (used by branch-and-bound nodes
// and by tests that pin inputs).
LpResult solve_lp(const MilpModel& model, const std::vector<double>& lower,
                  const std::vector<double>& upper, const LpOptions& options = {});

struct MilpOptions {
  double gap_abs = 1e-6;       // proven absolute optimality gap
  double int_tol = 1e-6;
  long node_limit = 1'000'000;
  std::uint64_t seed = 0;      // reserved; exploration is already deterministic
  LpOptions lp;
  std::ostream* node_log = nullptr;  // CSV: node,depth,bound,incumbent
};

struct SolveStats {
  long nodes = 0;
  long simplex_iterations = 0;
  double wall_seconds = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Numerical;
  double objective = 0.0;
  std::vector<double> assignment;
  SolveStats stats;
};

// Best-first branch-and-bound on binary variables: branches on the most
// fractional binary (ties by lowest variable id), prunes against the
// incumbent at gap_abs. Deterministic given model and options.
SolveResult solve_milp(const MilpModel& model, const MilpOptions& options = {});

}  // namespace distcl
