#include "distcl/milp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "distcl/num_format.hpp"

namespace distcl {

namespace {

// Merge duplicate variables and drop exact zeros; keeps term order by id.
std::vector<LinTerm> normalize_terms(std::vector<LinTerm> terms, int num_vars,
                                     const char* what) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_vars)
      throw std::invalid_argument(std::string(what) + ": unknown variable id " +
                                  std::to_string(t.var));
    if (!std::isfinite(t.coef))
      throw std::invalid_argument(std::string(what) + ": non-finite coefficient on variable id " +
                                  std::to_string(t.var));
  }
  std::sort(terms.begin(), terms.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().var == t.var)
      merged.back().coef += t.coef;
    else
      merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const LinTerm& t) { return t.coef == 0.0; }),
               merged.end());
  return merged;
}

}  // namespace

int MilpModel::add_var(const std::string& name, VarKind kind, double lower, double upper) {
  if (name.empty()) throw std::invalid_argument("add_var: empty name");
  if (name_index_.count(name))
    throw std::invalid_argument("add_var: duplicate variable name '" + name + "'");
  if (std::isnan(lower) || std::isnan(upper))
    throw std::invalid_argument("add_var: NaN bound on '" + name + "'");
  if (lower > upper)
    throw std::invalid_argument("add_var: lower > upper on '" + name + "' (" +
                                fmt_g17(lower) + " > " + fmt_g17(upper) + ")");
  if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0))
    throw std::invalid_argument("add_var: binary '" + name + "' bounds must lie in [0,1]");
  int id = static_cast<int>(vars_.size());
  vars_.push_back(VarDef{name, kind, lower, upper});
  name_index_.emplace(name, id);
  return id;
}

int MilpModel::add_continuous(const std::string& name, double lower, double upper) {
  return add_var(name, VarKind::Continuous, lower, upper);
}

int MilpModel::add_free(const std::string& name) {
  return add_var(name, VarKind::Continuous, -kInf, kInf);
}

int MilpModel::add_binary(const std::string& name) {
  return add_var(name, VarKind::Binary, 0.0, 1.0);
}

int MilpModel::add_constraint(std::vector<LinTerm> terms, Relation rel, double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("add_constraint: non-finite rhs");
  auto merged = normalize_terms(std::move(terms), num_vars(), "add_constraint");
  if (merged.empty())
    throw std::invalid_argument("add_constraint: constraint has no nonzero term");
  int id = static_cast<int>(constraints_.size());
  constraints_.push_back(LinConstraint{std::move(merged), rel, rhs});
  return id;
}

void MilpModel::set_objective(LinExpr expr, ObjSense sense) {
  if (!std::isfinite(expr.constant))
    throw std::invalid_argument("set_objective: non-finite constant");
  expr.terms = normalize_terms(std::move(expr.terms), num_vars(), "set_objective");
  objective_ = std::move(expr);
  sense_ = sense;
}

int MilpModel::var_id(const std::string& name) const {
  auto it = name_index_.find(name);
  if (it == name_index_.end())
    throw std::invalid_argument("unknown variable '" + name + "'");
  return it->second;
}

int MilpModel::find_var(const std::string& name) const {
  auto it = name_index_.find(name);
  return it == name_index_.end() ? -1 : it->second;
}

void MilpModel::set_var_bounds(int id, double lower, double upper) {
  if (id < 0 || id >= num_vars())
    throw std::invalid_argument("set_var_bounds: unknown variable id");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw std::invalid_argument("set_var_bounds: invalid bounds on '" + vars_[id].name + "'");
  vars_[id].lower = lower;
  vars_[id].upper = upper;
}

int MilpModel::num_binaries() const {
  int n = 0;
  for (const auto& v : vars_)
    if (v.kind == VarKind::Binary) ++n;
  return n;
}

Evaluation evaluate(const MilpModel& model, const std::vector<double>& assignment,
                    double tol) {
  if (static_cast<int>(assignment.size()) != model.num_vars())
    throw std::invalid_argument("evaluate: assignment has " +
                                std::to_string(assignment.size()) + " values, model has " +
                                std::to_string(model.num_vars()) + " variables");
  Evaluation ev;
  ev.objective = model.objective().constant;
  for (const auto& t : model.objective().terms) ev.objective += t.coef * assignment[t.var];

  for (int i = 0; i < model.num_vars(); ++i) {
    const VarDef& v = model.var(i);
    double x = assignment[i];
    if (x < v.lower - tol)
      ev.violations.push_back({Violation::Kind::LowerBound, i, v.lower - x});
    if (x > v.upper + tol)
      ev.violations.push_back({Violation::Kind::UpperBound, i, x - v.upper});
    if (v.kind == VarKind::Binary) {
      double gap = std::abs(x - std::round(x));
      if (gap > tol) ev.violations.push_back({Violation::Kind::Integrality, i, gap});
    }
  }

  for (int c = 0; c < model.num_constraints(); ++c) {
    const LinConstraint& con = model.constraints()[c];
    double lhs = 0.0;
    for (const auto& t : con.terms) lhs += t.coef * assignment[t.var];
    double slack = lhs - con.rhs;
    bool bad = (con.rel == Relation::LE && slack > tol) ||
               (con.rel == Relation::GE && slack < -tol) ||
               (con.rel == Relation::EQ && std::abs(slack) > tol);
    if (bad) ev.violations.push_back({Violation::Kind::Row, c, std::abs(slack)});
  }
  return ev;
}

namespace {

// Terms as (name, coef) pairs sorted by name: id permutations between two
// otherwise identical models (e.g. after an LP-file round trip) don't matter.
std::vector<std::pair<std::string, double>> named_terms(const MilpModel& m,
                                                        const std::vector<LinTerm>& terms) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.emplace_back(m.var(t.var).name, t.coef);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool models_structurally_equal(const MilpModel& a, const MilpModel& b, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.num_vars() != b.num_vars()) return fail("variable count differs");
  for (int i = 0; i < a.num_vars(); ++i) {
    const VarDef& va = a.var(i);
    int j = b.find_var(va.name);
    if (j < 0) return fail("variable '" + va.name + "' missing");
    const VarDef& vb = b.var(j);
    if (va.kind != vb.kind) return fail("variable '" + va.name + "' kind differs");
    if (va.lower != vb.lower || va.upper != vb.upper)
      return fail("variable '" + va.name + "' bounds differ");
  }
  if (a.num_constraints() != b.num_constraints()) return fail("constraint count differs");
  for (int i = 0; i < a.num_constraints(); ++i) {
    const LinConstraint &ca = a.constraints()[i], &cb = b.constraints()[i];
    if (ca.rel != cb.rel || ca.rhs != cb.rhs ||
        named_terms(a, ca.terms) != named_terms(b, cb.terms))
      return fail("constraint " + std::to_string(i) + " differs");
  }
  if (a.sense() != b.sense()) return fail("objective sense differs");
  if (a.objective().constant != b.objective().constant)
    return fail("objective constant differs");
  if (named_terms(a, a.objective().terms) != named_terms(b, b.objective().terms))
    return fail("objective terms differ");
  if (why) why->clear();
  return true;
}

}  // namespace distcl
