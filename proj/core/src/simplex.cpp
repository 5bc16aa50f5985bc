#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "distcl/solver.hpp"

namespace distcl {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NodeLimit: return "node_limit";
    case SolveStatus::IterLimit: return "iter_limit";
    case SolveStatus::Numerical: return "numerical";
  }
  return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

struct SparseCol {
  std::vector<int> row;
  std::vector<double> val;
};

// Dense LU of the basis plus product-form eta updates between
// refactorizations.
class Basis {
 public:
  void factor(const std::vector<SparseCol>& cols, const std::vector<int>& basic) {
    m_ = static_cast<int>(basic.size());
    MatrixXd b = MatrixXd::Zero(m_, m_);
    for (int j = 0; j < m_; ++j) {
      const SparseCol& c = cols[basic[j]];
      for (std::size_t k = 0; k < c.row.size(); ++k) b(c.row[k], j) = c.val[k];
    }
    lu_.compute(b);
    etas_.clear();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_; ++i) {
      double d = std::abs(lu_.matrixLU()(i, i));
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    singular_ = !(dmin > 1e-12 * std::max(1.0, dmax)) || !std::isfinite(dmax);
  }

  bool singular() const { return singular_; }
  int eta_count() const { return static_cast<int>(etas_.size()); }

  // v <- B^-1 v
  void ftran(VectorXd& v) const {
    v = lu_.solve(v);
    for (const auto& [r, w] : etas_) {
      double t = v(r) / w(r);
      v -= t * w;
      v(r) = t;
    }
  }

  // v <- B^-T v
  void btran(VectorXd& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const auto& [r, w] = *it;
      v(r) = (v(r) - (w.dot(v) - w(r) * v(r))) / w(r);
    }
    // B = P^-1 L U  =>  B^T z = c solved as U^T w = c, L^T q = w, z = P^T q
    const MatrixXd& lu = lu_.matrixLU();
    VectorXd w = lu.triangularView<Eigen::Upper>().transpose().solve(v);
    VectorXd q = lu.triangularView<Eigen::UnitLower>().transpose().solve(w);
    v = lu_.permutationP().transpose() * q;
  }

  void push_eta(int r, VectorXd w) { etas_.emplace_back(r, std::move(w)); }

 private:
  Eigen::PartialPivLU<MatrixXd> lu_;
  std::vector<std::pair<int, VectorXd>> etas_;
  int m_ = 0;
  bool singular_ = false;
};

constexpr double kBig = std::numeric_limits<double>::infinity();

class Simplex {
 public:
  Simplex(const MilpModel& model, const std::vector<double>& lb_struct,
          const std::vector<double>& ub_struct, const LpOptions& opt)
      : opt_(opt) {
    n_ = model.num_vars();
    m_ = model.num_constraints();
    ncols_ = n_ + m_;
    cols_.resize(ncols_);
    lb_.resize(ncols_);
    ub_.resize(ncols_);
    cost_.assign(ncols_, 0.0);
    rhs_.resize(std::max(m_, 1));

    for (int j = 0; j < n_; ++j) {
      lb_[j] = lb_struct[j];
      ub_[j] = ub_struct[j];
    }
    for (int i = 0; i < m_; ++i) {
      const LinConstraint& c = model.constraints()[i];
      for (const auto& t : c.terms) {
        cols_[t.var].row.push_back(i);
        cols_[t.var].val.push_back(t.coef);
      }
      int s = n_ + i;
      cols_[s].row.push_back(i);
      cols_[s].val.push_back(1.0);
      rhs_(i) = c.rhs;
      switch (c.rel) {
        case Relation::LE: lb_[s] = 0.0; ub_[s] = kBig; break;
        case Relation::GE: lb_[s] = -kBig; ub_[s] = 0.0; break;
        case Relation::EQ: lb_[s] = 0.0; ub_[s] = 0.0; break;
      }
    }

    sign_ = model.sense() == ObjSense::Maximize ? -1.0 : 1.0;
    for (const auto& t : model.objective().terms) cost_[t.var] += sign_ * t.coef;
    offset_ = model.objective().constant;
  }

  LpResult run() {
    LpResult res;
    if (m_ == 0) return solve_unconstrained(res);

    init_basis();
    long limit = opt_.iter_limit > 0 ? opt_.iter_limit
                                     : 2000 + 40L * (static_cast<long>(m_) + n_);

    bool phase1 = true;
    int stall = 0;
    bool bland = false;
    int verify_rounds = 0;

    while (true) {
      if (res.iterations > limit) {
        res.status = SolveStatus::IterLimit;
        return res;
      }
      if (basis_.eta_count() >= opt_.refactor_every) refactor();
      if (basis_.singular() || !finite_state()) {
        res.status = SolveStatus::Numerical;
        return res;
      }

      if (phase1 && total_infeasibility() <= opt_.feas_tol) {
        refactor();
        if (total_infeasibility() <= 1e-7) {
          phase1 = false;
          bland = false;
          stall = 0;
          verify_rounds = 0;
        }
      }

      int q = -1;
      double dq = 0.0;
      pick_entering(phase1, bland, q, dq);

      if (q < 0) {
        // Candidate terminal state: certify against a fresh factorization.
        refactor();
        if (basis_.singular()) {
          res.status = SolveStatus::Numerical;
          return res;
        }
        int q2 = -1;
        double d2 = 0.0;
        pick_entering(phase1, bland, q2, d2);
        if (q2 >= 0) {
          if (++verify_rounds > 5) {
            res.status = SolveStatus::Numerical;
            return res;
          }
          continue;
        }
        if (phase1) {
          if (total_infeasibility() > 1e-7) {
            res.status = SolveStatus::Infeasible;
            return res;
          }
          phase1 = false;
          verify_rounds = 0;
          continue;
        }
        finish(res, SolveStatus::Optimal);
        return res;
      }
      verify_rounds = 0;

      double s;  // movement direction of the entering variable
      if (state_[q] == VarState::AtLower)
        s = 1.0;
      else if (state_[q] == VarState::AtUpper)
        s = -1.0;
      else
        s = dq < 0 ? 1.0 : -1.0;

      VectorXd w = VectorXd::Zero(m_);
      for (std::size_t k = 0; k < cols_[q].row.size(); ++k)
        w(cols_[q].row[k]) = cols_[q].val[k];
      basis_.ftran(w);
      if (!w.allFinite()) {
        res.status = SolveStatus::Numerical;
        return res;
      }

      // Ratio test. In phase 1 a basic variable that is infeasible and
      // moving toward feasibility blocks at the bound it crosses; one moving
      // further away never blocks (its unit cost is already priced in).
      double delta = kBig;
      int leave_row = -1;
      double leave_to = 0.0;
      bool leave_at_upper = false;

      for (int i = 0; i < m_; ++i) {
        double wi = w(i);
        if (std::abs(wi) < opt_.pivot_tol) continue;
        int bj = basic_[i];
        double rate = -s * wi;
        double xb = x_[bj];
        double bound;
        bool to_upper;
        if (rate > 0) {
          if (phase1 && xb < lb_[bj] - opt_.feas_tol) {
            bound = lb_[bj];
            to_upper = false;
          } else if (phase1 && xb > ub_[bj] + opt_.feas_tol) {
            continue;  // moving further above its upper bound
          } else {
            bound = ub_[bj];
            to_upper = true;
          }
          if (!std::isfinite(bound)) continue;
        } else {
          if (phase1 && xb > ub_[bj] + opt_.feas_tol) {
            bound = ub_[bj];
            to_upper = true;
          } else if (phase1 && xb < lb_[bj] - opt_.feas_tol) {
            continue;  // moving further below its lower bound
          } else {
            bound = lb_[bj];
            to_upper = false;
          }
          if (!std::isfinite(bound)) continue;
        }
        double ratio = (bound - xb) / rate;
        if (ratio < 0) ratio = 0;

        bool take;
        if (leave_row < 0) {
          take = true;
        } else if (bland) {
          take = ratio < delta - 1e-12 ||
                 (ratio < delta + 1e-12 && bj < basic_[leave_row]);
        } else {
          take = ratio < delta - 1e-12 ||
                 (ratio < delta + 1e-12 && std::abs(wi) > std::abs(w(leave_row)));
        }
        if (take) {
          delta = ratio;
          leave_row = i;
          leave_to = bound;
          leave_at_upper = to_upper;
        }
      }

      double own = kBig;  // distance to the entering variable's opposite bound
      if (state_[q] != VarState::FreeZero && std::isfinite(lb_[q]) && std::isfinite(ub_[q]))
        own = ub_[q] - lb_[q];

      if (own <= delta) {
        if (!std::isfinite(own)) {  // both infinite: genuinely unbounded ray
          if (phase1) {
            res.status = SolveStatus::Numerical;  // phase-1 objective is bounded below
            return res;
          }
          finish(res, SolveStatus::Unbounded);
          return res;
        }
        apply_step(w, s, own);
        x_[q] += s * own;
        state_[q] = state_[q] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        ++res.iterations;
        track_progress(own, stall, bland);
        continue;
      }
      if (leave_row < 0) {
        if (phase1) {
          res.status = SolveStatus::Numerical;
          return res;
        }
        finish(res, SolveStatus::Unbounded);
        return res;
      }

      int p = basic_[leave_row];
      apply_step(w, s, delta);
      x_[q] += s * delta;
      x_[p] = leave_to;  // snap exactly onto its bound
      state_[p] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
      state_[q] = VarState::Basic;
      basic_[leave_row] = q;
      basis_.push_eta(leave_row, std::move(w));
      ++res.iterations;
      track_progress(delta, stall, bland);
    }
  }

 private:
  static void track_progress(double step, int& stall, bool& bland) {
    if (step <= 1e-12) {
      if (++stall > 40) bland = true;
    } else {
      stall = 0;
      bland = false;
    }
  }

  LpResult& solve_unconstrained(LpResult& res) {
    res.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      double c = cost_[j];
      double v;
      if (c > 0) {
        if (!std::isfinite(lb_[j])) {
          res.status = SolveStatus::Unbounded;
          return res;
        }
        v = lb_[j];
      } else if (c < 0) {
        if (!std::isfinite(ub_[j])) {
          res.status = SolveStatus::Unbounded;
          return res;
        }
        v = ub_[j];
      } else {
        v = std::isfinite(lb_[j]) ? lb_[j] : (std::isfinite(ub_[j]) ? ub_[j] : 0.0);
      }
      res.x[j] = v;
    }
    res.objective = offset_;
    for (int j = 0; j < n_; ++j) res.objective += sign_ * cost_[j] * res.x[j];
    res.status = SolveStatus::Optimal;
    return res;
  }

  void init_basis() {
    state_.assign(ncols_, VarState::AtLower);
    x_.assign(ncols_, 0.0);
    basic_.resize(m_);
    for (int j = 0; j < ncols_; ++j) {
      if (std::isfinite(lb_[j])) {
        state_[j] = VarState::AtLower;
        x_[j] = lb_[j];
      } else if (std::isfinite(ub_[j])) {
        state_[j] = VarState::AtUpper;
        x_[j] = ub_[j];
      } else {
        state_[j] = VarState::FreeZero;
        x_[j] = 0.0;
      }
    }
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      state_[n_ + i] = VarState::Basic;
    }
    refactor();
  }

  void refactor() {
    basis_.factor(cols_, basic_);
    if (basis_.singular()) return;
    recompute_basics();
  }

  void recompute_basics() {
    VectorXd r = rhs_;
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
      for (std::size_t k = 0; k < cols_[j].row.size(); ++k)
        r(cols_[j].row[k]) -= cols_[j].val[k] * x_[j];
    }
    basis_.ftran(r);
    for (int i = 0; i < m_; ++i) x_[basic_[i]] = r(i);
  }

  bool finite_state() const {
    for (int i = 0; i < m_; ++i)
      if (!std::isfinite(x_[basic_[i]])) return false;
    return true;
  }

  double total_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      if (x_[j] < lb_[j]) s += lb_[j] - x_[j];
      if (x_[j] > ub_[j]) s += x_[j] - ub_[j];
    }
    return s;
  }

  void pick_entering(bool phase1, bool bland, int& q, double& dq) const {
    VectorXd y = pricing_duals(phase1);
    q = -1;
    dq = 0.0;
    double best = 0.0;
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] == VarState::Basic || lb_[j] == ub_[j]) continue;
      double d = phase1 ? 0.0 : cost_[j];
      const SparseCol& col = cols_[j];
      for (std::size_t k = 0; k < col.row.size(); ++k) d -= y(col.row[k]) * col.val[k];
      bool eligible;
      if (state_[j] == VarState::AtLower)
        eligible = d < -opt_.opt_tol;
      else if (state_[j] == VarState::AtUpper)
        eligible = d > opt_.opt_tol;
      else
        eligible = std::abs(d) > opt_.opt_tol;
      if (!eligible) continue;
      if (bland) {
        q = j;
        dq = d;
        return;
      }
      double score = std::abs(d);
      if (score > best + 1e-15) {
        best = score;
        q = j;
        dq = d;
      }
    }
  }

  VectorXd pricing_duals(bool phase1) const {
    VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) {
      int j = basic_[i];
      if (phase1) {
        if (x_[j] < lb_[j] - opt_.feas_tol)
          cb(i) = -1.0;
        else if (x_[j] > ub_[j] + opt_.feas_tol)
          cb(i) = 1.0;
        else
          cb(i) = 0.0;
      } else {
        cb(i) = cost_[j];
      }
    }
    basis_.btran(cb);
    return cb;
  }

  void apply_step(const VectorXd& w, double s, double delta) {
    if (delta == 0.0) return;
    for (int i = 0; i < m_; ++i) {
      if (w(i) == 0.0) continue;
      x_[basic_[i]] -= s * delta * w(i);
    }
  }

  void finish(LpResult& res, SolveStatus status) {
    res.status = status;
    res.x.assign(x_.begin(), x_.begin() + n_);
    double obj = offset_;
    for (int j = 0; j < n_; ++j) obj += sign_ * cost_[j] * x_[j];
    res.objective = obj;
  }

  LpOptions opt_;
  int n_ = 0, m_ = 0, ncols_ = 0;
  std::vector<SparseCol> cols_;
  std::vector<double> lb_, ub_, cost_;
  VectorXd rhs_;
  double sign_ = 1.0, offset_ = 0.0;

  std::vector<VarState> state_;
  std::vector<double> x_;
  std::vector<int> basic_;
  Basis basis_;
};

}  // namespace

LpResult solve_lp(const MilpModel& model, const std::vector<double>& lower,
                  const std::vector<double>& upper, const LpOptions& options) {
  if (static_cast<int>(lower.size()) != model.num_vars() ||
      static_cast<int>(upper.size()) != model.num_vars())
    throw std::invalid_argument("solve_lp: bound override size mismatch");
  for (int j = 0; j < model.num_vars(); ++j)
    if (lower[j] > upper[j]) {
      LpResult res;
      res.status = SolveStatus::Infeasible;
      return res;
    }
  Simplex solver(model, lower, upper, options);
  return solver.run();
}

LpResult solve_lp(const MilpModel& model, const LpOptions& options) {
  std::vector<double> lo(model.num_vars()), hi(model.num_vars());
  for (int j = 0; j < model.num_vars(); ++j) {
    lo[j] = model.var(j).lower;
    hi[j] = model.var(j).upper;
  }
  return solve_lp(model, lo, hi, options);
}

}  // namespace distcl
