#pragma once

#include <stdexcept>
#include <string>

#include "distcl/milp.hpp"

namespace distcl {

// Human-readable LP dialect with Maximize/Minimize, Subject To, Bounds,
// Binaries and End sections. Export is canonical (variables by id,
// constraints by insertion order, terms by variable id, 17 significant
// digits), so export(import(export(m))) is byte-identical to export(m).
// Export requires every variable to appear in the objective or a constraint.
std::string export_lp(const MilpModel& model);
void write_lp(const std::string& path, const MilpModel& model);

// Throws LpParseError with a line number on unknown sections, unparseable
// numbers, or bounds/binary entries naming undefined variables.
MilpModel import_lp(const std::string& text, const std::string& origin = "<string>");
MilpModel read_lp(const std::string& path);

struct LpParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace distcl
