#include "tcrf/engine.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tcrf/errors.hpp"

namespace tcrf {

ExplanationGraph::ExplanationGraph(std::vector<GoalNode> nodes, NodeId root, std::vector<SwitchInfo> switches)
    : nodes_(std::move(nodes)), root_(root), switches_(std::move(switches)) {}

std::size_t ExplanationGraph::num_derivations() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.derivations.size();
  return n;
}

std::size_t ExplanationGraph::size() const {
  std::size_t n = 0;
  for (const auto& node : nodes_)
    for (const auto& d : node.derivations) n += 1 + d.subgoals.size() + d.switches.size();
  return n;
}

void ExplanationGraph::check_topological() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (const auto& d : nodes_[i].derivations)
      for (NodeId c : d.subgoals)
        if (c >= i) throw CyclicExplanation("explanation graph is not in topological order at node " + std::to_string(i));
}

namespace {

GoalList rename_goals(const GoalList& body, std::unordered_map<VarId, VarId>& ren) {
  GoalList out;
  out.reserve(body.size());
  for (const auto& g : body) {
    BodyGoal r;
    r.kind = g.kind;
    r.lhs = rename_apart(g.lhs, ren);
    r.rhs = rename_apart(g.rhs, ren);
    r.cond = rename_goals(g.cond, ren);
    r.left = rename_goals(g.left, ren);
    r.right = rename_goals(g.right, ren);
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t hash_derivation(const Derivation& d) {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  auto mix = [&](std::size_t x) { h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
  for (NodeId c : d.subgoals) mix(c);
  mix(0xabcdef);
  for (const auto& s : d.switches) mix((std::size_t(s.sw) << 32) | s.index);
  for (bool b : d.order) mix(b);
  return h;
}

struct Table {
  bool complete = false;
  std::vector<NodeId> answers;
  std::unordered_map<Term, NodeId, TermHash> index;
};

struct Activation {
  Term head;
  bool probabilistic = false;
  Table* table = nullptr;
  std::vector<NodeId> subgoals;
  std::vector<SwitchOutcome> switches;
  std::vector<bool> order;
};

// Continuation: the remaining goals of a body, then `next`. A frame with no
// goals marks the end of an if-then-else condition and sets `commit`.
struct Frame {
  const GoalList* goals;
  std::size_t pos;
  const Frame* next;
  bool* cut;
  bool* commit;
};

class Solver {
 public:
  Solver(const Program& p, const SolveOptions& o) : prog_(p), opts_(o) { uopts_.occurs_check = o.occurs_check; }

  std::optional<ExplanationGraph> run(const Term& query);

  SolveStats stats;

 private:
  Table& call(const Term& goal);
  void solve(const Frame* f);
  void record_answer();
  NodeId new_node(const Term& goal);
  void add_derivation(NodeId id, Derivation d);
  SwitchId switch_id(const Term& sw, const SwitchDecl& d);
  ExplanationGraph extract(NodeId root);

  void step() {
    if (++stats.resolution_steps > opts_.max_steps)
      throw StepLimitExceeded("resolution step limit of " + std::to_string(opts_.max_steps) +
                              " exceeded (program may not terminate)");
  }

  const Program& prog_;
  SolveOptions opts_;
  UnifyOptions uopts_;
  Bindings b_;
  Activation* act_ = nullptr;

  std::unordered_map<Term, Table, TermHash> tables_;
  std::vector<GoalNode> nodes_;
  std::vector<std::unordered_map<std::size_t, std::vector<std::uint32_t>>> dedup_;
  std::unordered_map<Term, SwitchId, TermHash> switch_ids_;
  std::vector<SwitchInfo> switches_;
};

NodeId Solver::new_node(const Term& goal) {
  nodes_.push_back({goal, {}});
  dedup_.emplace_back();
  return NodeId(nodes_.size() - 1);
}

void Solver::add_derivation(NodeId id, Derivation d) {
  auto& bucket = dedup_[id][hash_derivation(d)];
  auto& ders = nodes_[id].derivations;
  for (std::uint32_t k : bucket)
    if (ders[k] == d) return;
  bucket.push_back(std::uint32_t(ders.size()));
  ders.push_back(std::move(d));
}

SwitchId Solver::switch_id(const Term& sw, const SwitchDecl& d) {
  auto [it, fresh] = switch_ids_.try_emplace(sw, SwitchId(switches_.size()));
  if (fresh) switches_.push_back({sw, d.outcomes});
  return it->second;
}

Table& Solver::call(const Term& goal) {
  auto [it, inserted] = tables_.try_emplace(canonical_variant(goal));
  Table& t = it->second;
  if (!inserted) {
    if (!t.complete) throw CyclicExplanation("goal " + to_string(goal) + " depends on itself");
    return t;
  }
  ++stats.tables;
  PredKey k = pred_key(goal);
  Activation act;
  act.probabilistic = prog_.is_probabilistic(k);
  act.table = &t;
  Activation* saved = act_;
  act_ = &act;
  for (std::size_t idx : prog_.clauses_for(k)) {
    const Clause& c = prog_.clauses()[idx];
    step();
    std::unordered_map<VarId, VarId> ren;
    Term head = rename_apart(c.head, ren);
    std::size_t m = b_.mark();
    if (unify(head, goal, b_, uopts_)) {
      GoalList body = rename_goals(c.body, ren);
      act.head = head;
      Frame f{&body, 0, nullptr, nullptr, nullptr};
      solve(&f);
    }
    b_.undo(m);
  }
  act_ = saved;
  t.complete = true;
  return t;
}

void Solver::record_answer() {
  Activation& a = *act_;
  Term ans = b_.resolve(a.head);
  if (!ans.ground())
    throw SearchError("non-ground answer " + to_string(ans) + " (an output argument is left unbound)");
  Table& t = *a.table;
  NodeId id;
  auto it = t.index.find(ans);
  if (it == t.index.end()) {
    id = new_node(ans);
    t.index.emplace(ans, id);
    t.answers.push_back(id);
    ++stats.answers;
  } else {
    id = it->second;
  }
  if (a.probabilistic)
    add_derivation(id, Derivation{a.subgoals, a.switches, a.order});
  else if (nodes_[id].derivations.empty())
    nodes_[id].derivations.emplace_back();
}

void Solver::solve(const Frame* f) {
  if (!f) {
    record_answer();
    return;
  }
  if (!f->goals) {
    *f->commit = true;
    solve(f->next);
    return;
  }
  if (f->pos == f->goals->size()) {
    solve(f->next);
    return;
  }
  auto cut = [f] { return f->cut && *f->cut; };
  const BodyGoal& g = (*f->goals)[f->pos];
  Frame rest{f->goals, f->pos + 1, f->next, f->cut, nullptr};

  switch (g.kind) {
    case BodyGoal::Kind::True: solve(&rest); return;
    case BodyGoal::Kind::Fail: return;
    case BodyGoal::Kind::Unify: {
      std::size_t m = b_.mark();
      if (unify(g.lhs, g.rhs, b_, uopts_)) solve(&rest);
      b_.undo(m);
      return;
    }
    case BodyGoal::Kind::StrictEq:
      if (b_.resolve(g.lhs) == b_.resolve(g.rhs)) solve(&rest);
      return;
    case BodyGoal::Kind::Msw: {
      Term sw = b_.resolve(g.lhs);
      if (!sw.ground()) throw SearchError("msw called with non-ground switch name " + to_string(sw));
      const SwitchDecl* d = prog_.find_switch(sw);
      if (!d) throw SearchError("no values/2 declaration matches switch " + to_string(sw));
      SwitchId sid = switch_id(sw, *d);
      for (std::size_t i = 0; i < d->outcomes.size(); ++i) {
        step();
        std::size_t m = b_.mark();
        if (unify(g.rhs, d->outcomes[i], b_, uopts_)) {
          act_->switches.push_back({sid, std::uint32_t(i)});
          act_->order.push_back(true);
          solve(&rest);
          act_->switches.pop_back();
          act_->order.pop_back();
        }
        b_.undo(m);
        if (cut()) break;
      }
      return;
    }
    case BodyGoal::Kind::Call: {
      Term goal = b_.resolve(g.lhs);
      if (!goal.is_callable()) throw SearchError("call to non-callable term " + to_string(goal));
      PredKey k = pred_key(goal);
      if (!prog_.defines(k)) return;
      Table& t = call(goal);
      bool record = prog_.is_probabilistic(k);
      for (std::size_t j = 0; j < t.answers.size(); ++j) {
        step();
        NodeId a = t.answers[j];
        std::size_t m = b_.mark();
        if (unify(goal, nodes_[a].goal, b_, uopts_)) {
          if (record) {
            act_->subgoals.push_back(a);
            act_->order.push_back(false);
          }
          solve(&rest);
          if (record) {
            act_->subgoals.pop_back();
            act_->order.pop_back();
          }
        }
        b_.undo(m);
        if (cut()) break;
      }
      return;
    }
    case BodyGoal::Kind::Disj: {
      Frame l{&g.left, 0, &rest, f->cut, nullptr};
      solve(&l);
      if (cut()) return;
      Frame r{&g.right, 0, &rest, f->cut, nullptr};
      solve(&r);
      return;
    }
    case BodyGoal::Kind::IfThenElse: {
      bool committed = false;
      Frame then_f{&g.left, 0, &rest, f->cut, nullptr};
      Frame marker{nullptr, 0, &then_f, nullptr, &committed};
      Frame cond_f{&g.cond, 0, &marker, &committed, nullptr};
      solve(&cond_f);
      if (!committed && !cut()) {
        Frame else_f{&g.right, 0, &rest, f->cut, nullptr};
        solve(&else_f);
      }
      return;
    }
  }
}

ExplanationGraph Solver::extract(NodeId root) {
  // Post-order DFS from the root: reachable nodes only, children first.
  std::vector<NodeId> order;
  std::vector<std::uint8_t> state(nodes_.size(), 0);
  struct Visit {
    NodeId id;
    std::size_t d = 0, s = 0;
  };
  std::vector<Visit> stack{{root}};
  state[root] = 1;
  while (!stack.empty()) {
    Visit& v = stack.back();
    const auto& ders = nodes_[v.id].derivations;
    while (v.d < ders.size() && v.s >= ders[v.d].subgoals.size()) {
      ++v.d;
      v.s = 0;
    }
    if (v.d == ders.size()) {
      order.push_back(v.id);
      state[v.id] = 2;
      stack.pop_back();
      continue;
    }
    NodeId next = ders[v.d].subgoals[v.s++];
    if (state[next] == 0) {
      state[next] = 1;
      stack.push_back({next});
    } else if (state[next] == 1) {
      throw CyclicExplanation("cycle through goal " + to_string(nodes_[next].goal));
    }
  }

  std::vector<NodeId> remap(nodes_.size(), NodeId(-1));
  for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = NodeId(i);
  std::vector<SwitchId> sw_remap(switches_.size(), SwitchId(-1));
  std::vector<SwitchInfo> used;

  std::vector<GoalNode> out;
  out.reserve(order.size());
  for (NodeId old : order) {
    GoalNode n{nodes_[old].goal, std::move(nodes_[old].derivations)};
    for (auto& d : n.derivations) {
      for (auto& c : d.subgoals) c = remap[c];
      for (auto& s : d.switches) {
        if (sw_remap[s.sw] == SwitchId(-1)) {
          sw_remap[s.sw] = SwitchId(used.size());
          used.push_back(switches_[s.sw]);
        }
        s.sw = sw_remap[s.sw];
      }
    }
    out.push_back(std::move(n));
  }
  return ExplanationGraph(std::move(out), remap[root], std::move(used));
}

std::optional<ExplanationGraph> Solver::run(const Term& query) {
  if (!query.is_callable()) throw SearchError("query is not callable: " + to_string(query));
  PredKey k = pred_key(query);
  if (!prog_.defines(k)) return std::nullopt;
  Table& t = call(query);
  if (t.answers.empty()) return std::nullopt;
  NodeId root;
  if (query.ground()) {
    root = t.answers.front();
  } else {
    std::vector<NodeId> answers = t.answers;
    bool prob = prog_.is_probabilistic(k);
    root = new_node(query);
    for (NodeId a : answers) {
      if (prob)
        add_derivation(root, Derivation{{a}, {}, {false}});
      else
        add_derivation(root, Derivation{});
    }
  }
  return extract(root);
}

}  // namespace

std::optional<ExplanationGraph> solve_all(const Program& program, const Term& query, const SolveOptions& opts,
                                          SolveStats* stats) {
  Solver s(program, opts);
  std::optional<ExplanationGraph> g;
  try {
    g = s.run(query);
  } catch (...) {
    if (stats) *stats = s.stats;
    throw;
  }
  if (stats) *stats = s.stats;
  return g;
}

namespace {

std::size_t sat_add(std::size_t a, std::size_t b, std::size_t cap) { return a >= cap - std::min(cap, b) ? cap : a + b; }
std::size_t sat_mul(std::size_t a, std::size_t b, std::size_t cap) {
  if (a == 0 || b == 0) return 0;
  return a > cap / b ? cap : std::min(cap, a * b);
}

std::vector<std::size_t> node_counts(const ExplanationGraph& g, std::size_t cap) {
  std::vector<std::size_t> count(g.nodes().size(), 0);
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    std::size_t c = 0;
    for (const auto& d : g.node(NodeId(i)).derivations) {
      std::size_t p = 1;
      for (NodeId s : d.subgoals) p = sat_mul(p, count[s], cap);
      c = sat_add(c, p, cap);
    }
    count[i] = c;
  }
  return count;
}

}  // namespace

std::size_t count_explanations(const ExplanationGraph& g, std::size_t cap) {
  if (g.nodes().empty()) return 0;
  return node_counts(g, cap)[g.root()];
}

std::vector<CountVector> enumerate_explanations(const ExplanationGraph& g, std::size_t limit) {
  if (limit < 1) throw std::invalid_argument("enumeration limit must be at least 1");
  if (g.nodes().empty()) return {};
  std::size_t cap = limit == SIZE_MAX ? limit : limit + 1;
  std::size_t n = count_explanations(g, cap);
  if (n > limit)
    throw ExplosionError("more than " + std::to_string(limit) + " explanations for " + to_string(g.root_node().goal));

  // Each explanation is a sorted list of packed (switch, outcome) keys.
  using Expl = std::vector<std::uint64_t>;
  std::vector<std::vector<Expl>> per(g.nodes().size());
  for (std::size_t i = 0; i <= g.root(); ++i) {
    auto& mine = per[i];
    for (const auto& d : g.node(NodeId(i)).derivations) {
      Expl base;
      for (const auto& s : d.switches) base.push_back((std::uint64_t(s.sw) << 32) | s.index);
      std::vector<Expl> acc{base};
      for (NodeId c : d.subgoals) {
        std::vector<Expl> next;
        next.reserve(acc.size() * per[c].size());
        for (const auto& a : acc)
          for (const auto& e : per[c]) {
            Expl m = a;
            m.insert(m.end(), e.begin(), e.end());
            next.push_back(std::move(m));
          }
        acc = std::move(next);
      }
      for (auto& e : acc) {
        std::sort(e.begin(), e.end());
        mine.push_back(std::move(e));
      }
    }
  }

  std::vector<CountVector> out;
  out.reserve(per[g.root()].size());
  for (const auto& e : per[g.root()]) {
    CountVector cv;
    for (std::uint64_t key : e) {
      SwitchOutcome s{SwitchId(key >> 32), std::uint32_t(key & 0xffffffffu)};
      cv.add(g.switch_name(s), g.outcome(s), 1.0);
    }
    out.push_back(std::move(cv));
  }
  return out;
}

std::optional<bool> contains_explanation(const ExplanationGraph& g, const CountVector& e, std::size_t cap) {
  if (g.nodes().empty()) return false;
  // Slot per (switch, outcome) of e, with its target count.
  std::vector<std::uint32_t> limit;
  std::vector<std::vector<int>> slot(g.switches().size());
  for (std::size_t s = 0; s < g.switches().size(); ++s) {
    const auto& info = g.switches()[s];
    slot[s].assign(info.outcomes.size(), -1);
    for (std::size_t i = 0; i < info.outcomes.size(); ++i) {
      double c = e.get(info.name, info.outcomes[i]);
      if (c > 0) {
        slot[s][i] = int(limit.size());
        limit.push_back(std::uint32_t(c));
      }
    }
  }
  double total = 0;
  for (auto x : limit) total += x;
  if (total != e.total()) return false;  // e uses a switch outcome the graph never does

  using Vec = std::vector<std::uint32_t>;
  std::vector<std::set<Vec>> sets(g.nodes().size());
  std::size_t stored = 0;
  for (std::size_t n = 0; n <= g.root(); ++n) {
    for (const auto& d : g.node(NodeId(n)).derivations) {
      Vec base(limit.size(), 0);
      bool ok = true;
      for (const auto& s : d.switches) {
        int k = slot[s.sw][s.index];
        if (k < 0 || ++base[k] > limit[k]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      std::vector<Vec> acc{base};
      for (NodeId c : d.subgoals) {
        std::vector<Vec> next;
        for (const auto& a : acc)
          for (const auto& b : sets[c]) {
            Vec m = a;
            bool fits = true;
            for (std::size_t k = 0; k < m.size() && fits; ++k) fits = (m[k] += b[k]) <= limit[k];
            if (fits) next.push_back(std::move(m));
          }
        acc = std::move(next);
        if (acc.empty()) break;
      }
      for (auto& v : acc)
        if (sets[n].insert(std::move(v)).second && ++stored > cap) return std::nullopt;
    }
  }
  return sets[g.root()].count(limit) > 0;
}

std::string dump(const ExplanationGraph& g) {
  std::ostringstream os;
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    const auto& n = g.node(NodeId(i));
    os << "node " << i << " " << to_string(n.goal) << " :=";
    for (std::size_t k = 0; k < n.derivations.size(); ++k) {
      const auto& d = n.derivations[k];
      os << (k ? "; " : " ");
      if (d.order.empty()) {
        os << "true";
        continue;
      }
      std::size_t si = 0, gi = 0;
      for (std::size_t j = 0; j < d.order.size(); ++j) {
        if (j) os << ",";
        if (d.order[j]) {
          const auto& s = d.switches[si++];
          os << "msw(" << to_string(g.switch_name(s)) << "," << to_string(g.outcome(s)) << ")";
        } else {
          os << "goal(" << d.subgoals[gi++] << ")";
        }
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace tcrf
