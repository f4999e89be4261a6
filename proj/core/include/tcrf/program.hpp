#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tcrf/term.hpp"

namespace tcrf {

struct BodyGoal;
using GoalList = std::vector<BodyGoal>;

/// One literal of a clause body.
///
/// `Fail` only arises from an if-then without an else branch (or a literal
/// `fail`); everything else mirrors the source syntax one-to-one.
struct BodyGoal {
  enum class Kind { Call, Msw, Unify, StrictEq, IfThenElse, Disj, True, Fail };

  Kind kind = Kind::True;
  Term lhs;  // Call: goal; Msw: switch; Unify/StrictEq: left side
  Term rhs;  // Msw: outcome; Unify/StrictEq: right side
  GoalList cond;
  GoalList left;   // then-branch or left disjunct
  GoalList right;  // else-branch or right disjunct

  static BodyGoal call(Term g) { return {Kind::Call, std::move(g), {}, {}, {}, {}}; }
  static BodyGoal msw(Term sw, Term v) { return {Kind::Msw, std::move(sw), std::move(v), {}, {}, {}}; }
  static BodyGoal unify(Term a, Term b) { return {Kind::Unify, std::move(a), std::move(b), {}, {}, {}}; }
  static BodyGoal strict_eq(Term a, Term b) {
    return {Kind::StrictEq, std::move(a), std::move(b), {}, {}, {}};
  }
  static BodyGoal if_then_else(GoalList c, GoalList t, GoalList e) {
    return {Kind::IfThenElse, {}, {}, std::move(c), std::move(t), std::move(e)};
  }
  static BodyGoal disj(GoalList l, GoalList r) {
    return {Kind::Disj, {}, {}, {}, std::move(l), std::move(r)};
  }
  static BodyGoal truth() { return {}; }
  static BodyGoal fail() { return {Kind::Fail, {}, {}, {}, {}, {}}; }
};

struct PredKey {
  Symbol name;
  std::size_t arity = 0;
  friend bool operator==(const PredKey&, const PredKey&) = default;
};

struct PredKeyHash {
  std::size_t operator()(const PredKey& k) const { return k.name.id() * 31u + k.arity; }
};

PredKey pred_key(const Term& callable);
std::string to_string(const PredKey& k);

struct Clause {
  Term head;
  GoalList body;
  /// Source names of variables, used only for printing.
  std::unordered_map<VarId, std::string> var_names;

  PredKey key() const { return pred_key(head); }
};

/// `values(Pattern, Outcomes)` declaration.
struct SwitchDecl {
  Term pattern;
  std::vector<Term> outcomes;

  /// Index of `outcome` in the declared list, or nullopt.
  std::optional<std::size_t> index_of(const Term& outcome) const;
};

/// A loaded program: definite clauses plus switch declarations.
///
/// Immutable after construction. The constructor enforces the load-time
/// invariants (switch declarations well-formed and unambiguous, if-then-else
/// conditions free of probabilistic choices).
class Program {
 public:
  Program() = default;
  Program(std::vector<Clause> clauses, std::vector<SwitchDecl> decls);

  const std::vector<Clause>& clauses() const { return clauses_; }
  const std::vector<SwitchDecl>& switch_decls() const { return decls_; }

  /// Indices into clauses() for a predicate, in source order.
  const std::vector<std::size_t>& clauses_for(const PredKey& k) const;
  bool defines(const PredKey& k) const { return index_.count(k) != 0; }

  /// True if the predicate can reach an msw atom through its clauses.
  bool is_probabilistic(const PredKey& k) const { return probabilistic_.count(k) != 0; }

  /// Declaration whose pattern matches the ground switch term, or nullptr.
  const SwitchDecl* find_switch(const Term& ground_switch) const;

  /// Non-fatal lint findings collected at load time.
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Program text that parses back to an equivalent program.
  std::string to_source() const;

  /// New program with additional clauses appended (declarations kept).
  Program with_clauses(const std::vector<Clause>& extra) const;

 private:
  void build_index();
  void validate_decls();
  void compute_probabilistic();
  void validate_clauses();

  std::vector<Clause> clauses_;
  std::vector<SwitchDecl> decls_;
  std::unordered_map<PredKey, std::vector<std::size_t>, PredKeyHash> index_;
  std::unordered_set<PredKey, PredKeyHash> probabilistic_;
  std::unordered_map<Term, std::size_t, TermHash> ground_decls_;
  std::vector<std::size_t> pattern_decls_;
  std::vector<std::string> warnings_;
};

/// Prints one clause as `head :- body.` using its stored variable names.
std::string to_string(const Clause& c);
std::string to_string(const GoalList& body, const std::unordered_map<VarId, std::string>& names);

/// Alpha-equivalence of clauses: equal up to consistent variable renaming.
bool alpha_equivalent(const Clause& a, const Clause& b);

/// Every variable occurring in the clause, head first.
std::vector<VarId> clause_variables(const Clause& c);

}  // namespace tcrf
