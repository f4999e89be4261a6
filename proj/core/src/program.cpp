#include "tcrf/program.hpp"

#include <unordered_set>

#include "tcrf/errors.hpp"

namespace tcrf {

PredKey pred_key(const Term& callable) {
  if (!callable.is_callable()) throw LoadError("not a callable term: " + to_string(callable));
  return {callable.functor(), callable.arity()};
}

std::string to_string(const PredKey& k) { return k.name.name() + "/" + std::to_string(k.arity); }

std::optional<std::size_t> SwitchDecl::index_of(const Term& outcome) const {
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i] == outcome) return i;
  return std::nullopt;
}

namespace {

template <typename F>
void for_each_goal(const GoalList& body, F&& f) {
  for (const auto& g : body) {
    f(g);
    for_each_goal(g.cond, f);
    for_each_goal(g.left, f);
    for_each_goal(g.right, f);
  }
}

Term conj_term(const GoalList& body);

Term goal_term(const BodyGoal& g) {
  switch (g.kind) {
    case BodyGoal::Kind::Call: return g.lhs;
    case BodyGoal::Kind::Msw: return Term::compound("msw", {g.lhs, g.rhs});
    case BodyGoal::Kind::Unify: return Term::compound("=", {g.lhs, g.rhs});
    case BodyGoal::Kind::StrictEq: return Term::compound("==", {g.lhs, g.rhs});
    case BodyGoal::Kind::True: return Term::atom("true");
    case BodyGoal::Kind::Fail: return Term::atom("fail");
    case BodyGoal::Kind::IfThenElse:
      return Term::compound(";", {Term::compound("->", {conj_term(g.cond), conj_term(g.left)}),
                                  conj_term(g.right)});
    case BodyGoal::Kind::Disj: return Term::compound(";", {conj_term(g.left), conj_term(g.right)});
  }
  return Term::atom("true");
}

Term conj_term(const GoalList& body) {
  if (body.empty()) return Term::atom("true");
  Term out = goal_term(body.back());
  for (std::size_t i = body.size() - 1; i-- > 0;) out = Term::compound(",", {goal_term(body[i]), out});
  return out;
}

Term clause_term(const Clause& c) { return Term::compound(":-", {c.head, conj_term(c.body)}); }

}  // namespace

Program::Program(std::vector<Clause> clauses, std::vector<SwitchDecl> decls)
    : clauses_(std::move(clauses)), decls_(std::move(decls)) {
  build_index();
  validate_decls();
  compute_probabilistic();
  validate_clauses();
}

const std::vector<std::size_t>& Program::clauses_for(const PredKey& k) const {
  static const std::vector<std::size_t> none;
  auto it = index_.find(k);
  return it == index_.end() ? none : it->second;
}

void Program::build_index() {
  index_.clear();
  for (std::size_t i = 0; i < clauses_.size(); ++i) index_[clauses_[i].key()].push_back(i);
}

void Program::validate_decls() {
  ground_decls_.clear();
  pattern_decls_.clear();
  for (std::size_t i = 0; i < decls_.size(); ++i) {
    const auto& d = decls_[i];
    if (!d.pattern.is_callable())
      throw LoadError("switch name must be an atom or compound: " + to_string(d.pattern));
    if (d.outcomes.empty()) throw LoadError("empty outcome list for switch " + to_string(d.pattern));
    std::unordered_set<Term, TermHash> seen;
    for (const auto& v : d.outcomes) {
      if (!v.ground()) throw LoadError("non-ground outcome " + to_string(v) + " for switch " + to_string(d.pattern));
      if (!seen.insert(v).second)
        throw LoadError("duplicate outcome " + to_string(v) + " for switch " + to_string(d.pattern));
    }
    if (d.pattern.ground()) {
      if (!ground_decls_.emplace(d.pattern, i).second)
        throw LoadError("switch " + to_string(d.pattern) + " declared twice");
    } else {
      pattern_decls_.push_back(i);
    }
  }
  for (std::size_t a = 0; a < pattern_decls_.size(); ++a) {
    const Term& p = decls_[pattern_decls_[a]].pattern;
    for (std::size_t b = a + 1; b < pattern_decls_.size(); ++b) {
      std::unordered_map<VarId, VarId> ren;
      if (unify(p, rename_apart(decls_[pattern_decls_[b]].pattern, ren)))
        throw LoadError("ambiguous switch declarations: " + to_string(p) + " and " +
                        to_string(decls_[pattern_decls_[b]].pattern));
    }
    for (const auto& [g, idx] : ground_decls_)
      if (match(p, g))
        throw LoadError("ambiguous switch declarations: " + to_string(p) + " and " + to_string(g));
  }
}

void Program::compute_probabilistic() {
  probabilistic_.clear();
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& c : clauses_) {
      PredKey k = c.key();
      if (probabilistic_.count(k)) continue;
      bool prob = false;
      for_each_goal(c.body, [&](const BodyGoal& g) {
        if (g.kind == BodyGoal::Kind::Msw) prob = true;
        if (g.kind == BodyGoal::Kind::Call && g.lhs.is_callable() && probabilistic_.count(pred_key(g.lhs)))
          prob = true;
      });
      if (prob) {
        probabilistic_.insert(k);
        changed = true;
      }
    }
  }
}

void Program::validate_clauses() {
  warnings_.clear();
  std::unordered_set<PredKey, PredKeyHash> reported;
  for (const auto& c : clauses_) {
    for_each_goal(c.body, [&](const BodyGoal& g) {
      if (g.kind == BodyGoal::Kind::IfThenElse) {
        for_each_goal(g.cond, [&](const BodyGoal& h) {
          if (h.kind == BodyGoal::Kind::Msw)
            throw LoadError("msw inside if-then-else condition in clause for " + to_string(c.key()));
          if (h.kind == BodyGoal::Kind::Call && is_probabilistic(pred_key(h.lhs)))
            throw LoadError("probabilistic call " + to_string(h.lhs) +
                            " inside if-then-else condition in clause for " + to_string(c.key()));
        });
      }
      if (g.kind == BodyGoal::Kind::Call) {
        PredKey k = pred_key(g.lhs);
        if (!defines(k) && reported.insert(k).second)
          warnings_.push_back("call to undefined predicate " + to_string(k) + " (always fails)");
      }
    });

    // Mode lint: switch names should be bound by the head or earlier goals.
    std::unordered_set<VarId> bound;
    for (VarId v : variables_of(c.head)) bound.insert(v);
    for (const auto& g : c.body) {
      if (g.kind == BodyGoal::Kind::Msw) {
        for (VarId v : variables_of(g.lhs))
          if (!bound.count(v)) {
            warnings_.push_back("switch name " + to_string(g.lhs, [&](VarId id) {
              auto it = c.var_names.find(id);
              return it == c.var_names.end() ? "_" : it->second;
            }) + " in clause for " + to_string(c.key()) + " may be unbound at call time");
            break;
          }
      }
      for (VarId v : variables_of(goal_term(g))) bound.insert(v);
    }
  }
}

const SwitchDecl* Program::find_switch(const Term& ground_switch) const {
  auto it = ground_decls_.find(ground_switch);
  if (it != ground_decls_.end()) return &decls_[it->second];
  for (std::size_t i : pattern_decls_)
    if (match(decls_[i].pattern, ground_switch)) return &decls_[i];
  return nullptr;
}

Program Program::with_clauses(const std::vector<Clause>& extra) const {
  std::vector<Clause> cs = clauses_;
  cs.insert(cs.end(), extra.begin(), extra.end());
  return Program(std::move(cs), decls_);
}

namespace {

class ClauseNamer {
 public:
  explicit ClauseNamer(const Clause& c) : names_(c.var_names) {
    for (const auto& [v, n] : names_) used_.insert(n);
  }
  std::string operator()(VarId v) {
    auto it = names_.find(v);
    if (it != names_.end()) return it->second;
    std::string n;
    do {
      n = "V" + std::to_string(++counter_);
    } while (used_.count(n));
    used_.insert(n);
    names_.emplace(v, n);
    return n;
  }

 private:
  std::unordered_map<VarId, std::string> names_;
  std::unordered_set<std::string> used_;
  int counter_ = 0;
};

std::string body_string(const GoalList& body, ClauseNamer& namer);

std::string goal_string(const BodyGoal& g, ClauseNamer& namer) {
  auto term = [&](const Term& t) { return to_string(t, std::ref(namer)); };
  switch (g.kind) {
    case BodyGoal::Kind::Call: return term(g.lhs);
    case BodyGoal::Kind::Msw: return "msw(" + term(g.lhs) + "," + term(g.rhs) + ")";
    case BodyGoal::Kind::Unify: return term(g.lhs) + " = " + term(g.rhs);
    case BodyGoal::Kind::StrictEq: return term(g.lhs) + " == " + term(g.rhs);
    case BodyGoal::Kind::True: return "true";
    case BodyGoal::Kind::Fail: return "fail";
    case BodyGoal::Kind::IfThenElse:
      return "( " + body_string(g.cond, namer) + " -> " + body_string(g.left, namer) + " ; " +
             body_string(g.right, namer) + " )";
    case BodyGoal::Kind::Disj:
      return "( " + body_string(g.left, namer) + " ; " + body_string(g.right, namer) + " )";
  }
  return "true";
}

std::string body_string(const GoalList& body, ClauseNamer& namer) {
  if (body.empty()) return "true";
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += ", ";
    out += goal_string(body[i], namer);
  }
  return out;
}

}  // namespace

std::string to_string(const Clause& c) {
  ClauseNamer namer(c);
  std::string out = to_string(c.head, std::ref(namer));
  if (!c.body.empty()) out += " :- " + body_string(c.body, namer);
  return out + ".";
}

std::string to_string(const GoalList& body, const std::unordered_map<VarId, std::string>& names) {
  Clause c;
  c.var_names = names;
  ClauseNamer namer(c);
  return body_string(body, namer);
}

std::string Program::to_source() const {
  std::string out;
  for (const auto& d : decls_) {
    std::unordered_map<VarId, std::string> names;
    out += "values(" + to_string(d.pattern, [&](VarId v) {
      auto [it, fresh] = names.emplace(v, "_V" + std::to_string(names.size() + 1));
      return it->second;
    }) + ",";
    out += to_string(Term::list(d.outcomes)) + ").\n";
  }
  if (!decls_.empty() && !clauses_.empty()) out += "\n";
  for (const auto& c : clauses_) out += to_string(c) + "\n";
  return out;
}

bool alpha_equivalent(const Clause& a, const Clause& b) {
  return canonical_variant(clause_term(a)) == canonical_variant(clause_term(b));
}

std::vector<VarId> clause_variables(const Clause& c) { return variables_of(clause_term(c)); }

}  // namespace tcrf
