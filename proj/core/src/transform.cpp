#include "tcrf/transform.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/parser.hpp"

namespace tcrf {

namespace {

GoalList rename_goals(const GoalList& gs, std::unordered_map<VarId, VarId>& ren) {
  GoalList out;
  for (const auto& g : gs) {
    BodyGoal r = g;
    r.lhs = rename_apart(g.lhs, ren);
    r.rhs = rename_apart(g.rhs, ren);
    r.cond = rename_goals(g.cond, ren);
    r.left = rename_goals(g.left, ren);
    r.right = rename_goals(g.right, ren);
    out.push_back(std::move(r));
  }
  return out;
}

GoalList apply_goals(const Substitution& s, const GoalList& gs) {
  GoalList out;
  for (const auto& g : gs) {
    BodyGoal r = g;
    r.lhs = tcrf::apply(s, g.lhs);
    r.rhs = tcrf::apply(s, g.rhs);
    r.cond = apply_goals(s, g.cond);
    r.left = apply_goals(s, g.left);
    r.right = apply_goals(s, g.right);
    out.push_back(std::move(r));
  }
  return out;
}

void goal_vars(const GoalList& gs, std::set<VarId>& out) {
  for (const auto& g : gs) {
    for (VarId v : variables_of(g.lhs)) out.insert(v);
    for (VarId v : variables_of(g.rhs)) out.insert(v);
    goal_vars(g.cond, out);
    goal_vars(g.left, out);
    goal_vars(g.right, out);
  }
}

Term goal_term(const BodyGoal& g) {
  switch (g.kind) {
    case BodyGoal::Kind::Call: return g.lhs;
    case BodyGoal::Kind::Msw: return Term::compound("msw", {g.lhs, g.rhs});
    case BodyGoal::Kind::Unify: return Term::compound("=", {g.lhs, g.rhs});
    case BodyGoal::Kind::StrictEq: return Term::compound("==", {g.lhs, g.rhs});
    case BodyGoal::Kind::True: return Term::atom("true");
    case BodyGoal::Kind::Fail: return Term::atom("fail");
    default: throw TransformError("fold: control constructs cannot be folded");
  }
}

Term body_term(const GoalList& gs, std::size_t from, std::size_t to) {
  std::vector<Term> ts;
  for (std::size_t i = from; i < to; ++i) ts.push_back(goal_term(gs[i]));
  return Term::compound("$body", std::move(ts));
}

// Keeps source names for variables that survive a substitution, dropping
// any that would clash.
std::unordered_map<VarId, std::string> carry_names(
    const Clause& result, const std::vector<std::pair<const std::unordered_map<VarId, std::string>*, const Substitution*>>& sources,
    const std::vector<std::unordered_map<VarId, VarId>>& renamings) {
  std::set<VarId> live;
  for (VarId v : clause_variables(result)) live.insert(v);
  std::unordered_map<VarId, std::string> names;
  std::set<std::string> used;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto& [src, sub] = sources[k];
    for (const auto& [orig, name] : *src) {
      VarId v = orig;
      if (k < renamings.size() && !renamings[k].empty()) {
        auto it = renamings[k].find(orig);
        if (it == renamings[k].end()) continue;
        v = it->second;
      }
      Term img = sub ? tcrf::apply(*sub, Term::var(v)) : Term::var(v);
      if (!img.is_var() || !live.count(img.var_id()) || names.count(img.var_id()) || name == "_") continue;
      if (!used.insert(name).second) continue;
      names.emplace(img.var_id(), name);
    }
  }
  return names;
}

struct Entry {
  std::size_t id;
  Clause clause;
  bool from_definition = false;
  bool unfolded = false;
};

std::string step_error(std::size_t n, const std::string& msg) {
  return "step " + std::to_string(n) + ": " + msg;
}

}  // namespace

std::vector<TransformStep> parse_script(const std::string& text) {
  static const std::regex unfold_re(R"(^unfold\s+(\d+)\s+at\s+(\d+)\s*\.$)");
  static const std::regex fold_re(R"(^fold\s+(\d+)\s+at\s+(\d+)\s*\.\.\s*(\d+)\s+by\s+(\d+)\s*\.$)");
  std::vector<TransformStep> steps;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('%'));
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    auto where = "script line " + std::to_string(lineno) + ": ";
    std::smatch m;
    TransformStep s;
    if (line.rfind("define", 0) == 0 && line.size() > 6 && std::isspace(static_cast<unsigned char>(line[6]))) {
      s.kind = TransformStep::Kind::Define;
      auto cs = parse_clauses(line.substr(7));
      if (cs.size() != 1) throw TransformError(where + "define takes exactly one clause");
      s.clause = clause_from_term(cs.front());
    } else if (std::regex_match(line, m, unfold_re)) {
      s.kind = TransformStep::Kind::Unfold;
      s.target = std::stoul(m[1]);
      s.pos = std::stoul(m[2]);
    } else if (std::regex_match(line, m, fold_re)) {
      s.kind = TransformStep::Kind::Fold;
      s.target = std::stoul(m[1]);
      s.from = std::stoul(m[2]);
      s.to = std::stoul(m[3]);
      s.by = std::stoul(m[4]);
    } else {
      throw TransformError(where + "expected define/unfold/fold step");
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

std::vector<TransformStep> load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

TransformResult apply_script(const Program& program, const std::vector<TransformStep>& script) {
  std::vector<Entry> cur;
  std::size_t next_id = 1;
  for (const auto& c : program.clauses()) cur.push_back({next_id++, c});
  std::map<std::size_t, Clause> defs;  // definition clauses, kept for folding

  TransformResult res;
  res.log.push_back(
      "% fold conditions: unique definition; internal variables of the definition map to distinct variables "
      "local to the folded goals; a target derived from a definition has been unfolded at least once");
  for (const auto& e : cur) res.log.push_back("(" + std::to_string(e.id) + ") " + to_string(e.clause) + "  [loaded]");

  auto find = [&](std::size_t id, std::size_t n) {
    auto it = std::find_if(cur.begin(), cur.end(), [&](const Entry& e) { return e.id == id; });
    if (it == cur.end()) throw TransformError(step_error(n, "no clause (" + std::to_string(id) + ") in the current program"));
    return it;
  };

  for (std::size_t n = 1; n <= script.size(); ++n) {
    const auto& st = script[n - 1];
    switch (st.kind) {
      case TransformStep::Kind::Define: {
        PredKey k = st.clause.key();
        bool clash = std::any_of(cur.begin(), cur.end(), [&](const Entry& e) { return e.clause.key() == k; }) ||
                     std::any_of(defs.begin(), defs.end(), [&](const auto& d) { return d.second.key() == k; });
        if (clash) throw TransformError(step_error(n, "define: predicate " + to_string(k) + " is not new"));
        std::size_t id = next_id++;
        defs.emplace(id, st.clause);
        cur.push_back({id, st.clause, true, false});
        res.log.push_back("(" + std::to_string(id) + ") " + to_string(st.clause) + "  [define]");
        break;
      }
      case TransformStep::Kind::Unfold: {
        auto it = find(st.target, n);
        Entry target = *it;
        if (st.pos < 1 || st.pos > target.clause.body.size())
          throw TransformError(step_error(n, "unfold: no body goal at position " + std::to_string(st.pos)));
        const BodyGoal& g = target.clause.body[st.pos - 1];
        if (g.kind != BodyGoal::Kind::Call)
          throw TransformError(step_error(n, "unfold: goal at position " + std::to_string(st.pos) +
                                                 " is an msw or builtin, not a user predicate call"));
        std::vector<Entry> produced;
        std::vector<std::size_t> used;
        for (const auto& e : cur) {
          if (e.id == target.id || e.clause.key() != pred_key(g.lhs)) continue;
          std::unordered_map<VarId, VarId> ren;
          Term head = rename_apart(e.clause.head, ren);
          GoalList body = rename_goals(e.clause.body, ren);
          auto s = unify(g.lhs, head);
          if (!s) continue;
          Clause c;
          c.head = tcrf::apply(*s, target.clause.head);
          GoalList nb(target.clause.body.begin(), target.clause.body.begin() + long(st.pos - 1));
          nb.insert(nb.end(), body.begin(), body.end());
          nb.insert(nb.end(), target.clause.body.begin() + long(st.pos), target.clause.body.end());
          c.body = apply_goals(*s, nb);
          c.var_names = carry_names(c, {{&target.clause.var_names, &*s}, {&e.clause.var_names, &*s}}, {{}, ren});
          produced.push_back({0, std::move(c), target.from_definition, true});
          used.push_back(e.id);
        }
        std::string by;
        for (std::size_t u : used) by += (by.empty() ? "(" : ",(") + std::to_string(u) + ")";
        for (auto& p : produced) {
          p.id = next_id++;
          res.log.push_back("(" + std::to_string(p.id) + ") " + to_string(p.clause) + "  [unfold (" +
                            std::to_string(target.id) + ") at " + std::to_string(st.pos) + " by " + by + "]");
        }
        if (produced.empty())
          res.log.push_back("(" + std::to_string(target.id) + ") deleted  [unfold at " + std::to_string(st.pos) +
                            " matched no clause]");
        auto pos = cur.erase(it);
        cur.insert(pos, produced.begin(), produced.end());
        break;
      }
      case TransformStep::Kind::Fold: {
        auto it = find(st.target, n);
        auto dit = defs.find(st.by);
        if (dit == defs.end())
          throw TransformError(step_error(n, "fold: (" + std::to_string(st.by) + ") is not a definition clause"));
        const Clause& target = it->clause;
        if (st.from < 1 || st.to < st.from || st.to > target.body.size())
          throw TransformError(step_error(n, "fold: body range out of bounds"));
        if (it->from_definition && !it->unfolded)
          throw TransformError(step_error(n, "fold: target (" + std::to_string(it->id) +
                                                 ") comes from a definition and has not been unfolded"));
        std::unordered_map<VarId, VarId> ren;
        Term dhead = rename_apart(dit->second.head, ren);
        GoalList dbody = rename_goals(dit->second.body, ren);
        if (dbody.size() != st.to - st.from + 1)
          throw TransformError(step_error(n, "fold: definition body has " + std::to_string(dbody.size()) +
                                                 " goals but the range has " + std::to_string(st.to - st.from + 1)));
        auto theta = match(body_term(dbody, 0, dbody.size()), body_term(target.body, st.from - 1, st.to));
        if (!theta) throw TransformError(step_error(n, "fold: body goals are not an instance of the definition body"));

        std::set<VarId> head_vars;
        for (VarId v : variables_of(dhead)) head_vars.insert(v);
        std::set<VarId> internal;
        goal_vars(dbody, internal);
        for (VarId v : head_vars) internal.erase(v);

        // Variables of the target outside the folded range, and of the head image.
        std::set<VarId> outside;
        for (VarId v : variables_of(target.head)) outside.insert(v);
        GoalList rest(target.body.begin(), target.body.begin() + long(st.from - 1));
        rest.insert(rest.end(), target.body.begin() + long(st.to), target.body.end());
        goal_vars(rest, outside);
        for (VarId v : head_vars)
          for (VarId w : variables_of(tcrf::apply(*theta, Term::var(v)))) outside.insert(w);
        std::set<VarId> images;
        for (VarId v : internal) {
          Term img = tcrf::apply(*theta, Term::var(v));
          if (!img.is_var())
            throw TransformError(step_error(n, "fold: internal variable of the definition maps to " + to_string(img)));
          if (!images.insert(img.var_id()).second)
            throw TransformError(step_error(n, "fold: two internal variables of the definition map to the same variable"));
          if (outside.count(img.var_id()))
            throw TransformError(step_error(n, "fold: internal variable of the definition escapes the folded goals"));
        }

        Clause c;
        c.head = target.head;
        c.body.assign(target.body.begin(), target.body.begin() + long(st.from - 1));
        c.body.push_back(BodyGoal::call(tcrf::apply(*theta, dhead)));
        c.body.insert(c.body.end(), target.body.begin() + long(st.to), target.body.end());
        c.var_names = carry_names(c, {{&target.var_names, nullptr}}, {});
        Entry e{next_id++, std::move(c), it->from_definition, it->unfolded};
        res.log.push_back("(" + std::to_string(e.id) + ") " + to_string(e.clause) + "  [fold (" +
                          std::to_string(it->id) + ") at " + std::to_string(st.from) + ".." + std::to_string(st.to) +
                          " by (" + std::to_string(st.by) + ")]");
        *it = std::move(e);
        break;
      }
    }
  }

  std::vector<Clause> clauses;
  for (const auto& e : cur) {
    clauses.push_back(e.clause);
    res.clauses.push_back({e.id, e.clause});
  }
  res.program = Program(std::move(clauses), program.switch_decls());
  std::string ids;
  for (const auto& e : cur) ids += (ids.empty() ? "" : ",") + std::to_string(e.id);
  res.log.push_back("% final program: {" + ids + "}");
  return res;
}

bool EquivalenceReport::all_equal() const {
  return std::all_of(probes.begin(), probes.end(), [](const ProbeResult& p) { return p.status == ProbeResult::Status::Equal; });
}

std::size_t EquivalenceReport::skipped() const {
  return std::count_if(probes.begin(), probes.end(), [](const ProbeResult& p) { return p.status == ProbeResult::Status::Skipped; });
}

EquivalenceReport check_explanation_equivalence(const Program& p1, const std::string& pattern1, const Program& p2,
                                                const std::string& pattern2, const std::vector<Probe>& probes,
                                                std::size_t limit, const SolveOptions& opts) {
  auto instantiate = [](const ParsedTerm& pat, const Probe& probe) {
    Substitution s;
    for (const auto& [v, name] : pat.var_names) {
      auto it = probe.find(name);
      if (it != probe.end()) s.emplace(v, it->second);
    }
    return tcrf::apply(s, pat.term);
  };
  auto expand = [&](const Program& p, const Term& goal) {
    auto g = solve_all(p, goal, opts);
    std::vector<CountVector> out;
    if (g) out = enumerate_explanations(*g, limit);
    std::sort(out.begin(), out.end());
    return out;
  };
  ParsedTerm a = parse_term(pattern1), b = parse_term(pattern2);
  EquivalenceReport rep;
  for (const auto& probe : probes) {
    ProbeResult r;
    r.goal1 = instantiate(a, probe);
    r.goal2 = instantiate(b, probe);
    std::vector<CountVector> e1, e2;
    try {
      e1 = expand(p1, r.goal1);
      e2 = expand(p2, r.goal2);
    } catch (const ExplosionError& e) {
      r.status = ProbeResult::Status::Skipped;
      r.detail = e.what();
      rep.probes.push_back(std::move(r));
      continue;
    }
    r.count1 = e1.size();
    r.count2 = e2.size();
    if (e1 == e2) {
      r.status = ProbeResult::Status::Equal;
    } else {
      r.status = ProbeResult::Status::Unequal;
      std::vector<CountVector> diff;
      std::set_symmetric_difference(e1.begin(), e1.end(), e2.begin(), e2.end(), std::back_inserter(diff));
      r.counterexample = diff.front();
      bool in_first = std::count(e1.begin(), e1.end(), diff.front()) > std::count(e2.begin(), e2.end(), diff.front());
      r.detail = to_string(diff.front()) + " occurs more often under the " + (in_first ? "first" : "second") + " program";
    }
    rep.probes.push_back(std::move(r));
  }
  return rep;
}

std::string to_string(const EquivalenceReport& r) {
  std::ostringstream out;
  out << "% probe-based check (bounded testing, not a proof)\n";
  for (const auto& p : r.probes) {
    const char* st = p.status == ProbeResult::Status::Equal ? "equal" : p.status == ProbeResult::Status::Unequal ? "UNEQUAL" : "skipped";
    out << st << "\t" << to_string(p.goal1) << "\t" << to_string(p.goal2) << "\t" << p.count1 << "\t" << p.count2;
    if (!p.detail.empty()) out << "\t" << p.detail;
    out << "\n";
  }
  out << "% " << r.probes.size() << " probes, " << (r.all_equal() ? "all equal" : "not all equal") << ", " << r.skipped()
      << " skipped\n";
  return out.str();
}

}  // namespace tcrf
