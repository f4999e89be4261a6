#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcrf/program.hpp"
#include "tcrf/term.hpp"

namespace tcrf {

/// A term read from text together with the names its variables had.
struct ParsedTerm {
  Term term;
  std::unordered_map<VarId, std::string> var_names;
};

/// Reads a single term (no trailing '.') such as `hmm0([a,b])`.
ParsedTerm parse_term(std::string_view text);

/// Reads a sequence of clauses, each terminated by '.'.
std::vector<ParsedTerm> parse_clauses(std::string_view text);

/// Converts a clause term (`H :- B` or `H`) into a Clause.
Clause clause_from_term(const ParsedTerm& t);

/// Parses program text. `values/2` facts become switch declarations; every
/// other clause is kept in source order.
Program parse_program(std::string_view source);

/// Parses a program file from disk.
Program load_program(const std::string& path);

}  // namespace tcrf
