#pragma once

#include <stdexcept>
#include <string>

#include "warden/model.hpp"

namespace warden {

// Parse errors carry the source location and what was expected there.
struct ParseError : std::runtime_error {
    enum class Kind {
        Syntax,
        ArityConflict,
        UnknownAnnotation,
        UnsupportedFeature,
    };

    ParseError(Kind k, int line, int col, const std::string& message)
        : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + message),
          kind(k),
          line(line),
          col(col) {}

    Kind kind;
    int line;
    int col;
};

struct ParsedProgram {
    Program program;
    Database inline_facts;  // ground clauses written directly in the source
};

// Grammar summary (.vada files, UTF-8, '%' line comments):
//   rule       := body "->" head "."
//   fact       := atom "."            (ground args only)
//   body       := item ("," item)*    item := atom | condition | assignment
//   head       := atom ("," atom)*
//   atom       := predicate "(" term ("," term)* ")"   predicates lowercase
//   term       := Variable (uppercase) | constant
//   constant   := "string" | 123 | 4.5 | true | false | 2020-01-31
//   condition  := expr cmp expr       cmp in  < > <= >= != =
//   assignment := Var "=" aggfun "(" Var ["," "<" Var,... ">"] ")"
//               | Var "=" "#" name "(" Var,... ")"
//   annotation := @input("p") | @output("p") | @bind("p","csv","path"[,"types"])
//               | @post("p","certain"|"sort")
ParsedProgram parse_program(const std::string& text,
                            const std::string& filename = "<input>");

// Round-trip printer; parse(format(p)) is structurally equal to parse input.
std::string format_program(const Program& program,
                           const Database& inline_facts = {});

}  // namespace warden
