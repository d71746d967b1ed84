#pragma once

#include <string>

#include "prophecy/staging/ir.hpp"

namespace prophecy::staging {

// C-like text for a recorded program. Deterministic; throws StagingError on a
// call to a name outside the runtime registry.
std::string emit_c(const SecondStageProgram& prog);

std::string emit_expr(const Expr& e);

// Single-line rendering of one statement header, used in diagnostics.
std::string describe(const Stmt& s);

}  // namespace prophecy::staging
