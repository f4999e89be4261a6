#include "tcrf/term.hpp"

#include <atomic>
#include <cctype>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>

namespace tcrf {

namespace {

class SymbolTable {
 public:
  SymbolTable() { names_.emplace_back(); index_.emplace("", 0); }

  std::uint32_t intern(std::string_view name) {
    {
      std::shared_lock lock(mu_);
      auto it = index_.find(std::string(name));
      if (it != index_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    auto [it, inserted] = index_.emplace(std::string(name), 0);
    if (inserted) {
      it->second = static_cast<std::uint32_t>(names_.size());
      names_.emplace_back(name);
    }
    return it->second;
  }

  const std::string& name(std::uint32_t id) {
    std::shared_lock lock(mu_);
    return names_.at(id);
  }

 private:
  std::shared_mutex mu_;
  std::deque<std::string> names_;  // deque keeps references stable
  std::unordered_map<std::string, std::uint32_t> index_;
};

SymbolTable& symbols() {
  static SymbolTable table;
  return table;
}

constexpr std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::atomic<VarId> next_var{1};

}  // namespace

Symbol::Symbol(std::string_view name) : id_(symbols().intern(name)) {}

const std::string& Symbol::name() const { return symbols().name(id_); }

VarId fresh_var_id() { return next_var.fetch_add(1, std::memory_order_relaxed); }

struct Term::Node {
  Kind kind;
  std::int64_t value;  // var id, integer value, or symbol id
  std::vector<Term> args;
  std::size_t hash;
  bool ground;
};

namespace {
const Symbol& nil_symbol() {
  static const Symbol s("[]");
  return s;
}
const Symbol& cons_symbol() {
  static const Symbol s(".");
  return s;
}
}  // namespace

Term::Term() : Term(atom(nil_symbol())) {}

Term Term::var(VarId id) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->value = id;
  n->hash = mix(0x51ed27, static_cast<std::size_t>(id));
  n->ground = false;
  return Term(std::move(n));
}

Term Term::atom(Symbol s) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->value = s.id();
  n->hash = mix(0xa70, s.id());
  n->ground = true;
  return Term(std::move(n));
}

Term Term::integer(std::int64_t v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Int;
  n->value = v;
  n->hash = mix(0x1e7, static_cast<std::size_t>(v));
  n->ground = true;
  return Term(std::move(n));
}

Term Term::compound(Symbol functor, std::vector<Term> args) {
  if (functor.id() == 0) throw std::invalid_argument("compound term with empty functor");
  if (args.empty()) return atom(functor);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Compound;
  n->value = functor.id();
  std::size_t h = mix(0xc0, functor.id());
  h = mix(h, args.size());
  bool g = true;
  for (const auto& a : args) {
    h = mix(h, a.hash());
    g = g && a.ground();
  }
  n->hash = h;
  n->ground = g;
  n->args = std::move(args);
  return Term(std::move(n));
}

Term Term::nil() {
  static const Term t = atom(nil_symbol());
  return t;
}

Term Term::cons(Term head, Term tail) {
  return compound(cons_symbol(), {std::move(head), std::move(tail)});
}

Term Term::list(std::span<const Term> items, std::optional<Term> tail) {
  Term out = tail ? *tail : nil();
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = cons(*it, out);
  return out;
}

Term::Kind Term::kind() const { return node_->kind; }

bool Term::is_nil() const { return is_atom() && node_->value == nil_symbol().id(); }

bool Term::is_cons() const {
  return is_compound() && node_->args.size() == 2 && node_->value == cons_symbol().id();
}

VarId Term::var_id() const { return node_->value; }
std::int64_t Term::int_value() const { return node_->value; }

Symbol Term::functor() const {
  if (is_atom() || is_compound()) return Symbol::from_id(static_cast<std::uint32_t>(node_->value));
  return Symbol();
}

std::size_t Term::arity() const { return node_->args.size(); }
const std::vector<Term>& Term::args() const { return node_->args; }
bool Term::ground() const { return node_->ground; }
std::size_t Term::hash() const { return node_->hash; }

std::optional<std::vector<Term>> Term::list_items() const {
  std::vector<Term> out;
  const Term* cur = this;
  while (cur->is_cons()) {
    out.push_back(cur->arg(0));
    cur = &cur->arg(1);
  }
  if (!cur->is_nil()) return std::nullopt;
  return out;
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind || x.value != y.value || x.args.size() != y.args.size())
    return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (x.args[i] != y.args[i]) return false;
  return true;
}

namespace {
int kind_rank(Term::Kind k) {
  switch (k) {
    case Term::Kind::Var: return 0;
    case Term::Kind::Int: return 1;
    case Term::Kind::Atom: return 2;
    case Term::Kind::Compound: return 3;
  }
  return 4;
}
}  // namespace

int compare(const Term& a, const Term& b) {
  if (a.same_node(b)) return 0;
  int ra = kind_rank(a.kind()), rb = kind_rank(b.kind());
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind()) {
    case Term::Kind::Var:
      return a.var_id() < b.var_id() ? -1 : (a.var_id() > b.var_id() ? 1 : 0);
    case Term::Kind::Int:
      return a.int_value() < b.int_value() ? -1 : (a.int_value() > b.int_value() ? 1 : 0);
    case Term::Kind::Atom:
      if (a.functor() == b.functor()) return 0;
      return a.functor().name() < b.functor().name() ? -1 : 1;
    case Term::Kind::Compound: {
      if (a.arity() != b.arity()) return a.arity() < b.arity() ? -1 : 1;
      if (a.functor() != b.functor()) return a.functor().name() < b.functor().name() ? -1 : 1;
      for (std::size_t i = 0; i < a.arity(); ++i)
        if (int c = compare(a.arg(i), b.arg(i)); c != 0) return c;
      return 0;
    }
  }
  return 0;
}

namespace {
void collect_vars(const Term& t, std::vector<VarId>& out) {
  if (t.ground()) return;
  if (t.is_var()) {
    for (VarId v : out)
      if (v == t.var_id()) return;
    out.push_back(t.var_id());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}
}  // namespace

std::vector<VarId> variables_of(const Term& t) {
  std::vector<VarId> out;
  collect_vars(t, out);
  return out;
}

bool occurs_in(VarId v, const Term& t) {
  if (t.ground()) return false;
  if (t.is_var()) return t.var_id() == v;
  for (const auto& a : t.args())
    if (occurs_in(v, a)) return true;
  return false;
}

namespace {
Term canon(const Term& t, std::unordered_map<VarId, VarId>& ids) {
  if (t.ground()) return t;
  if (t.is_var()) {
    auto [it, inserted] = ids.emplace(t.var_id(), -static_cast<VarId>(ids.size()) - 1);
    return Term::var(it->second);
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(canon(a, ids));
  return Term::compound(t.functor(), std::move(args));
}
}  // namespace

Term canonical_variant(const Term& t) {
  std::unordered_map<VarId, VarId> ids;
  return canon(t, ids);
}

bool is_variant(const Term& a, const Term& b) { return canonical_variant(a) == canonical_variant(b); }

bool atom_needs_quotes(std::string_view name) {
  if (name == "[]") return false;
  if (name.empty()) return true;
  if (!std::islower(static_cast<unsigned char>(name[0]))) return true;
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return true;
  return false;
}

namespace {
void write_atom(std::string& out, std::string_view name) {
  if (!atom_needs_quotes(name)) {
    out += name;
    return;
  }
  out += '\'';
  for (char c : name) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  out += '\'';
}

using VarNamer = std::function<std::string(VarId)>;

std::string default_var_name(VarId v) {
  return v < 0 ? "_C" + std::to_string(-v) : "_G" + std::to_string(v);
}

void write_term(std::string& out, const Term& t, const VarNamer& namer) {
  switch (t.kind()) {
    case Term::Kind::Var:
      out += namer ? namer(t.var_id()) : default_var_name(t.var_id());
      return;
    case Term::Kind::Int:
      out += std::to_string(t.int_value());
      return;
    case Term::Kind::Atom:
      write_atom(out, t.functor().name());
      return;
    case Term::Kind::Compound:
      break;
  }
  if (t.is_cons()) {
    out += '[';
    const Term* cur = &t;
    bool first = true;
    while (cur->is_cons()) {
      if (!first) out += ',';
      first = false;
      write_term(out, cur->arg(0), namer);
      cur = &cur->arg(1);
    }
    if (!cur->is_nil()) {
      out += '|';
      write_term(out, *cur, namer);
    }
    out += ']';
    return;
  }
  write_atom(out, t.functor().name());
  out += '(';
  for (std::size_t i = 0; i < t.arity(); ++i) {
    if (i) out += ',';
    write_term(out, t.arg(i), namer);
  }
  out += ')';
}
}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  write_term(out, t, nullptr);
  return out;
}

std::string to_string(const Term& t, const VarNamer& var_name) {
  std::string out;
  write_term(out, t, var_name);
  return out;
}

// ---------------------------------------------------------------------------

void Bindings::undo(std::size_t mark) {
  while (trail_.size() > mark) {
    map_.erase(trail_.back());
    trail_.pop_back();
  }
}

void Bindings::bind(VarId v, Term t) {
  map_.insert_or_assign(v, std::move(t));
  trail_.push_back(v);
}

const Term* Bindings::lookup(VarId v) const {
  auto it = map_.find(v);
  return it == map_.end() ? nullptr : &it->second;
}

Term Bindings::walk(Term t) const {
  while (t.is_var()) {
    const Term* b = lookup(t.var_id());
    if (!b) break;
    t = *b;
  }
  return t;
}

Term Bindings::resolve(const Term& t) const {
  if (t.ground() || map_.empty()) return t;
  if (t.is_var()) {
    Term w = walk(t);
    return w.is_var() ? w : resolve(w);
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  bool changed = false;
  for (const auto& a : t.args()) {
    args.push_back(resolve(a));
    changed = changed || !args.back().same_node(a);
  }
  return changed ? Term::compound(t.functor(), std::move(args)) : t;
}

namespace {
bool occurs_walk(VarId v, const Term& t, const Bindings& b) {
  Term w = b.walk(t);
  if (w.ground()) return false;
  if (w.is_var()) return w.var_id() == v;
  for (const auto& a : w.args())
    if (occurs_walk(v, a, b)) return true;
  return false;
}
}  // namespace

bool unify(const Term& a, const Term& b, Bindings& bindings, UnifyOptions opts) {
  const std::size_t start = bindings.mark();
  std::vector<std::pair<Term, Term>> stack;
  stack.emplace_back(a, b);
  while (!stack.empty()) {
    auto [x0, y0] = std::move(stack.back());
    stack.pop_back();
    Term x = bindings.walk(x0);
    Term y = bindings.walk(y0);
    if (x.same_node(y)) continue;
    if (x.is_var() && y.is_var() && x.var_id() == y.var_id()) continue;
    if (x.is_var() || y.is_var()) {
      if (!x.is_var()) std::swap(x, y);
      if (opts.occurs_check && !y.is_var() && occurs_walk(x.var_id(), y, bindings)) {
        bindings.undo(start);
        return false;
      }
      bindings.bind(x.var_id(), y);
      continue;
    }
    if (x.ground() && y.ground()) {
      if (x != y) {
        bindings.undo(start);
        return false;
      }
      continue;
    }
    if (x.kind() != y.kind() || x.functor() != y.functor() || x.arity() != y.arity() ||
        (x.is_int() && x.int_value() != y.int_value())) {
      bindings.undo(start);
      return false;
    }
    for (std::size_t i = x.arity(); i-- > 0;) stack.emplace_back(x.arg(i), y.arg(i));
  }
  return true;
}

Term apply(const Substitution& s, const Term& t) {
  if (t.ground() || s.empty()) return t;
  if (t.is_var()) {
    auto it = s.find(t.var_id());
    return it == s.end() ? t : it->second;
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(apply(s, a));
  return Term::compound(t.functor(), std::move(args));
}

std::optional<Substitution> unify(const Term& a, const Term& b, const Substitution& base,
                                  UnifyOptions opts) {
  Bindings bindings;
  for (const auto& [v, t] : base) bindings.bind(v, t);
  if (!unify(a, b, bindings, opts)) return std::nullopt;
  Substitution out;
  for (const auto& [v, t] : bindings.map()) out.emplace(v, bindings.resolve(t));
  return out;
}

namespace {
bool match_into(const Term& p, const Term& t, Substitution& s) {
  if (p.is_var()) {
    auto [it, inserted] = s.emplace(p.var_id(), t);
    return inserted || it->second == t;
  }
  if (p.ground()) return p == t;
  if (!t.is_compound() || t.functor() != p.functor() || t.arity() != p.arity()) return false;
  for (std::size_t i = 0; i < p.arity(); ++i)
    if (!match_into(p.arg(i), t.arg(i), s)) return false;
  return true;
}
}  // namespace

std::optional<Substitution> match(const Term& pattern, const Term& target) {
  Substitution s;
  if (!match_into(pattern, target, s)) return std::nullopt;
  return s;
}

Term rename_apart(const Term& t, std::unordered_map<VarId, VarId>& renaming) {
  if (t.ground()) return t;
  if (t.is_var()) {
    auto [it, inserted] = renaming.emplace(t.var_id(), 0);
    if (inserted) it->second = fresh_var_id();
    return Term::var(it->second);
  }
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(rename_apart(a, renaming));
  return Term::compound(t.functor(), std::move(args));
}

}  // namespace tcrf
