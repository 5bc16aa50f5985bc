#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace distcl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class Relation { LE, GE, EQ };
enum class ObjSense { Minimize, Maximize };

struct VarDef {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

struct LinConstraint {
  std::vector<LinTerm> terms;  // merged, sorted by var id, nonzero coefs
  Relation rel = Relation::LE;
  double rhs = 0.0;
};

struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr& add(int var, double coef) {
    terms.push_back({var, coef});
    return *this;
  }
};

// Plain-value algebraic model: variables, linear constraints, one linear
// objective. Construction validates names, ids and finiteness; evaluation is
// read-only and thread-safe.
class MilpModel {
 public:
  int add_var(const std::string& name, VarKind kind, double lower, double upper);
  int add_continuous(const std::string& name, double lower = 0.0, double upper = kInf);
  int add_free(const std::string& name);  // (-inf, +inf)
  int add_binary(const std::string& name);

  // Terms are merged by variable; a constraint must keep at least one
  // nonzero term after merging.
  int add_constraint(std::vector<LinTerm> terms, Relation rel, double rhs);

  void set_objective(LinExpr expr, ObjSense sense);

  int var_id(const std::string& name) const;        // throws if unknown
  int find_var(const std::string& name) const;      // -1 if unknown
  const VarDef& var(int id) const { return vars_.at(id); }
  void set_var_bounds(int id, double lower, double upper);

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int num_binaries() const;

  const std::vector<VarDef>& vars() const { return vars_; }
  const std::vector<LinConstraint>& constraints() const { return constraints_; }
  const LinExpr& objective() const { return objective_; }
  ObjSense sense() const { return sense_; }

 private:
  std::vector<VarDef> vars_;
  std::vector<LinConstraint> constraints_;
  LinExpr objective_;
  ObjSense sense_ = ObjSense::Minimize;
  std::unordered_map<std::string, int> name_index_;
};

struct Violation {
  enum class Kind { Row, LowerBound, UpperBound, Integrality };
  Kind kind = Kind::Row;
  int index = -1;     // constraint id or variable id
  double amount = 0;  // positive slack beyond tolerance
};

struct Evaluation {
  double objective = 0.0;
  std::vector<Violation> violations;
  bool feasible() const { return violations.empty(); }
};

// Independent feasibility oracle: reports the objective value and every
// constraint/bound/integrality violation beyond `tol`.
Evaluation evaluate(const MilpModel& model, const std::vector<double>& assignment,
                    double tol = 1e-6);

// Structural comparison used by round-trip tests: same variables (name, kind,
// bounds) in order, same constraints up to term ordering, same objective.
bool models_structurally_equal(const MilpModel& a, const MilpModel& b, std::string* why = nullptr);

}  // namespace distcl
