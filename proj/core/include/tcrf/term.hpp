#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tcrf {

/// Interned atom / functor name. Equality is integer equality.
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(std::string_view name);

  const std::string& name() const;
  std::uint32_t id() const { return id_; }
  static Symbol from_id(std::uint32_t id) {
    Symbol s;
    s.id_ = id;
    return s;
  }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend bool operator!=(Symbol a, Symbol b) { return a.id_ != b.id_; }

 private:
  std::uint32_t id_ = 0;  // 0 is the empty name
};

using VarId = std::int64_t;

/// Returns a variable id never handed out before in this process.
VarId fresh_var_id();

/// Immutable first-order term: variable, atom, integer or compound.
///
/// Terms are cheap handles onto shared immutable nodes; copying a Term never
/// copies structure. Hash and groundness are computed once at construction.
class Term {
 public:
  enum class Kind : std::uint8_t { Var, Atom, Int, Compound };

  Term();  // the atom '[]'

  static Term var(VarId id);
  static Term fresh_var() { return var(fresh_var_id()); }
  static Term atom(Symbol s);
  static Term atom(std::string_view name) { return atom(Symbol(name)); }
  static Term integer(std::int64_t v);
  static Term compound(Symbol functor, std::vector<Term> args);
  static Term compound(std::string_view functor, std::vector<Term> args) {
    return compound(Symbol(functor), std::move(args));
  }

  static Term nil();
  static Term cons(Term head, Term tail);
  static Term list(std::span<const Term> items, std::optional<Term> tail = std::nullopt);

  Kind kind() const;
  bool is_var() const { return kind() == Kind::Var; }
  bool is_atom() const { return kind() == Kind::Atom; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_compound() const { return kind() == Kind::Compound; }
  bool is_atomic() const { return is_atom() || is_int(); }
  bool is_callable() const { return is_atom() || is_compound(); }
  bool is_nil() const;
  bool is_cons() const;

  VarId var_id() const;
  std::int64_t int_value() const;
  /// Atom name or compound functor.
  Symbol functor() const;
  std::size_t arity() const;
  const std::vector<Term>& args() const;
  const Term& arg(std::size_t i) const { return args()[i]; }

  bool ground() const;
  std::size_t hash() const;

  /// Proper list elements; nullopt if the term is not a proper list.
  std::optional<std::vector<Term>> list_items() const;

  bool same_node(const Term& o) const { return node_ == o.node_; }

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

  struct Node;

 private:
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Standard order of terms: Var < Int < Atom < Compound; compounds by arity,
/// then name, then arguments left to right.
int compare(const Term& a, const Term& b);

struct TermLess {
  bool operator()(const Term& a, const Term& b) const { return compare(a, b) < 0; }
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

/// Collects variables in left-to-right first-occurrence order.
std::vector<VarId> variables_of(const Term& t);
bool occurs_in(VarId v, const Term& t);

/// Rename variables to canonical ids 0,1,2.. in first-occurrence order.
/// Two terms are variants iff their canonical forms are equal.
Term canonical_variant(const Term& t);
bool is_variant(const Term& a, const Term& b);

/// Textual form readable back by the parser.
std::string to_string(const Term& t);
std::string to_string(const Term& t, const std::function<std::string(VarId)>& var_name);
bool atom_needs_quotes(std::string_view name);

/// Variable bindings with an undo trail.
///
/// Bindings are triangular: a bound variable may map to a term containing
/// other bound variables. `resolve` applies them fully.
class Bindings {
 public:
  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t mark);

  void bind(VarId v, Term t);
  const Term* lookup(VarId v) const;

  /// Follows variable chains until an unbound variable or non-variable.
  Term walk(Term t) const;
  /// Applies all bindings recursively.
  Term resolve(const Term& t) const;

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::unordered_map<VarId, Term>& map() const { return map_; }

 private:
  std::unordered_map<VarId, Term> map_;
  std::vector<VarId> trail_;
};

struct UnifyOptions {
  bool occurs_check = true;
};

/// Unifies in place. On failure the bindings are restored to their state at
/// entry.
bool unify(const Term& a, const Term& b, Bindings& bindings, UnifyOptions opts = {});

/// Idempotent substitution (every range term is fully resolved).
using Substitution = std::unordered_map<VarId, Term>;

Term apply(const Substitution& s, const Term& t);

/// Most general unifier of a and b that extends `base`, or nullopt.
std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& base = {},
                                  UnifyOptions opts = {});

/// One-way matching: a substitution s over pattern's variables with
/// apply(s, pattern) == target, or nullopt.
std::optional<Substitution> match(const Term& pattern, const Term& target);

/// Consistent renaming of all variables in `t` to fresh ones; `renaming` is
/// extended and reused so several terms can share one renaming.
Term rename_apart(const Term& t, std::unordered_map<VarId, VarId>& renaming);

}  // namespace tcrf

template <>
struct std::hash<tcrf::Term> {
  std::size_t operator()(const tcrf::Term& t) const { return t.hash(); }
};
