#pragma once

#include <string_view>

#include "prophecy/core/program.hpp"

namespace prophecy::core {

// Program text: one `label: command` per line, `#` starts a comment.
//
//   cmd  := skip | IDENT := aexp | if bexp then LABEL | goto LABEL | halt | done
//   aexp := term (('+' | '-') term)*
//   term := atom ('*' atom)*
//   atom := INT | '-' INT | IDENT | '(' aexp ')'
//   bexp := conj ('or' conj)*
//   conj := neg ('and' neg)*
//   neg  := 'not' neg | true | false | aexp ('=' | '<=') aexp | '(' bexp ')'
//
// Throws ProgramError (syntax errors carry line and column).
Program parse_program(std::string_view text);

AExp parse_aexp(std::string_view text);
BExp parse_bexp(std::string_view text);

}  // namespace prophecy::core
