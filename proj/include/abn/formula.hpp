#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "abn/dag.hpp"

namespace abn {

// Formula grammar (whitespace insignificant):
//
//   formula := '~' [ term { '+' term } ]
//   term    := names [ '|' names ]
//   names   := '.' | ident { ':' ident }
//
// `child|parent` sets entry (child, parent). `:` lists several names on
// either side, `+` separates terms and `.` stands for every node except the
// child of the pair being expanded. A term without `|` names nodes but
// adds no arcs. Duplicate pairs are idempotent.

struct FormulaParse {
    BinaryMatrix matrix;
    std::vector<std::string> warnings;
};

/// Throws Error("SyntaxError"), Error("UnknownName") or Error("SelfArc").
BinaryMatrix parse_formula(std::string_view text, const std::vector<std::string>& nodes);

/// As parse_formula, also reporting constructs whose meaning is only fixed
/// by this implementation (a child list combined with `.`).
FormulaParse parse_formula_verbose(std::string_view text, const std::vector<std::string>& nodes);

/// Canonical formula: one term per child with parents, in node order.
/// parse_formula(render_formula(m, nodes), nodes) == m.
std::string render_formula(const BinaryMatrix& m, const std::vector<std::string>& nodes);

}  // namespace abn
