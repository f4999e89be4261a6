#include "tcrf/zoo/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "tcrf/errors.hpp"

namespace tcrf::zoo {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> words_of(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string atom(const std::string& s) { return to_string(Term::atom(s)); }

std::string atom_list(const std::vector<std::string>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + atom(xs[i]);
  return out + "]";
}

Term word_list(const std::vector<std::string>& ws) {
  std::vector<Term> ts;
  for (const auto& w : ws) ts.push_back(Term::atom(w));
  return Term::list(ts);
}

std::string symbol_name(const Term& t) {
  if (t.is_atom()) return t.functor().name();
  if (t.is_int()) return std::to_string(t.int_value());
  throw DataError("expected a grammar symbol, got " + to_string(t));
}

std::vector<std::string> symbol_list(const Term& t) {
  auto items = t.list_items();
  if (!items) throw DataError("expected a symbol list, got " + to_string(t));
  std::vector<std::string> out;
  for (const auto& x : *items) out.push_back(symbol_name(x));
  return out;
}

const char* kTopdownParser = R"(parse(L0):- start_symbol(C), nt(C,L0,[]).
parse(L0,T):- start_symbol(C), nt_t(C,L0,[],T).

nt(A,L0,L):- msw(A,RHS), rhs(RHS,L0,L).
rhs([X],L0,L):- sym(X,L0,L).
rhs([X,Y|Xs],L0,L):- split(L0,L1,L), sym(X,L0,L1), rhs([Y|Xs],L1,L).
sym(X,L0,L):- ( terminal(X) -> L0 = [X|L] ; nt(X,L0,L) ).

nt_t(A,L0,L,tree(A,Cs)):- labels(Cs,RHS), msw(A,RHS), rhs_t(RHS,L0,L,Cs).
rhs_t([X],L0,L,[T]):- sym_t(X,L0,L,T).
rhs_t([X,Y|Xs],L0,L,[T|Ts]):- split(L0,L1,L), sym_t(X,L0,L1,T), rhs_t([Y|Xs],L1,L,Ts).
sym_t(X,L0,L,T):- ( terminal(X) -> L0 = [X|L], T = X ; nt_t(X,L0,L,T) ).

split([_|L1],L1,L):- proper_suffix(L1,L).
split([_|Xs],L1,L):- split(Xs,L1,L).
proper_suffix([_|L],L).
proper_suffix([_|Xs],L):- proper_suffix(Xs,L).
labels([],[]).
labels([T|Ts],[A|As]):- ( T = tree(A,_) -> true ; A = T ), labels(Ts,As).
)";

// Left column verbatim; the tree version threads the tree argument through
// the same control flow. lc_call_t reads the parent node off the known tree
// spine so that the rule choice is bound before the msw call.
const char* kLeftCornerParser = R"(plcg(L0):-
   start_symbol(C),
   g_call([C],L0,[]).

g_call([],L,L).
g_call([G|R],[Wd|L],L2):-
   ( terminal(G) ->
         G = Wd, L1 = L
   ; msw(first(G),Wd),
        lc_call(G,Wd,L,L1) ),
   g_call(R,L1,L2).

lc_call(G,B,L,L2):-
   msw(lc(G,B),rule(A,[B|RHS2])),
   g_call(RHS2,L,L1),
   ( G == A -> attach_or_project(A,Op),
       ( Op == attach, L2=L1
       ; Op == project, lc_call(G,A,L1,L2) )
   ; lc_call(G,A,L1,L2) ).
attach_or_project(A,Op):-
   ( reachable(A,A) -> msw(attach(A),Op) ; Op = attach ).

plcg(L0,T):-
   start_symbol(C),
   g_call_t([C],L0,[],[T]).

g_call_t([],L,L,[]).
g_call_t([G|R],[Wd|L],L2,T):-
   ( terminal(G) ->
         G = Wd, L1 = L, T = [Wd|TR]
   ; msw(first(G),Wd), T = [TG|TR],
        lc_call_t(G,Wd,L,L1,Wd,TG) ),
   g_call_t(R,L1,L2,TR).

lc_call_t(G,B,L,L2,TB,TG):-
   spine_parent(TG,TB,TA), TA = tree(A,[TB|TR]), labels(TR,RHS2),
   msw(lc(G,B),rule(A,[B|RHS2])),
   g_call_t(RHS2,L,L1,TR),
   ( G == A -> attach_or_project(A,Op),
       ( Op == attach, L2=L1, TG = TA
       ; Op == project, lc_call_t(G,A,L1,L2,TA,TG) )
   ; lc_call_t(G,A,L1,L2,TA,TG) ).

spine_parent(tree(A,[TB|TR]),TB,tree(A,[TB|TR])).
spine_parent(tree(_,[T|_]),TB,P):- spine_parent(T,TB,P).
labels([],[]).
labels([T|Ts],[A|As]):- ( T = tree(A,_) -> true ; A = T ), labels(Ts,As).
)";

}  // namespace

Grammar::Grammar(std::string start, std::vector<Rule> rules) : start_(std::move(start)), rules_(std::move(rules)) {
  if (rules_.empty()) throw DataError("grammar has no rules");
  std::set<std::string> lhs;
  for (const auto& r : rules_) {
    if (r.rhs.empty()) throw DataError("empty right-hand side for " + r.lhs + " (epsilon rules are not supported)");
    if (lhs.insert(r.lhs).second) nonterminals_.push_back(r.lhs);
  }
  for (std::size_t i = 0; i < rules_.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (rules_[i] == rules_[j]) throw DataError("duplicate rule for " + rules_[i].lhs);
  for (const auto& r : rules_)
    for (const auto& s : r.rhs)
      if (!lhs.count(s) && terminal_set_.insert(s).second) terminals_.push_back(s);
  if (!lhs.count(start_)) throw DataError("start symbol " + start_ + " has no rules");

  // Productivity: every nonterminal must derive some terminal string.
  std::set<std::string> productive;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : rules_) {
      if (productive.count(r.lhs)) continue;
      if (std::all_of(r.rhs.begin(), r.rhs.end(), [&](const std::string& s) { return is_terminal(s) || productive.count(s); })) {
        productive.insert(r.lhs);
        changed = true;
      }
    }
  }
  if (!productive.count(start_)) throw DataError("start symbol " + start_ + " derives no terminal string");
  for (const auto& a : nonterminals_)
    if (!productive.count(a)) throw DataError("nonterminal " + a + " derives no terminal string");

  // Unit cycles make explanation graphs cyclic.
  std::map<std::string, std::vector<std::string>> unit;
  for (const auto& r : rules_)
    if (r.rhs.size() == 1 && !is_terminal(r.rhs[0])) unit[r.lhs].push_back(r.rhs[0]);
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& a) {
    int& st = state[a];
    if (st == 2) return;
    if (st == 1) throw DataError("unit-rule cycle through " + a);
    st = 1;
    for (const auto& b : unit[a]) visit(b);
    state[a] = 2;
  };
  for (const auto& a : nonterminals_) visit(a);

  for (const auto& r : rules_) lc_[r.lhs].insert(r.rhs[0]);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& [a, set] : lc_) {
      std::set<std::string> add;
      for (const auto& b : set) {
        auto it = lc_.find(b);
        if (it != lc_.end())
          for (const auto& c : it->second)
            if (!set.count(c)) add.insert(c);
      }
      if (!add.empty()) {
        set.insert(add.begin(), add.end());
        changed = true;
      }
    }
  }
}

bool Grammar::has_rule(const std::string& lhs, const std::vector<std::string>& rhs) const {
  return std::any_of(rules_.begin(), rules_.end(), [&](const Rule& r) { return r.lhs == lhs && r.rhs == rhs; });
}

std::vector<const Rule*> Grammar::rules_for(const std::string& lhs) const {
  std::vector<const Rule*> out;
  for (const auto& r : rules_)
    if (r.lhs == lhs) out.push_back(&r);
  return out;
}

bool Grammar::left_recursive(const std::string& a) const {
  auto it = lc_.find(a);
  return it != lc_.end() && it->second.count(a);
}

Grammar parse_grammar(const std::string& text) {
  std::istringstream in(text);
  std::string raw, start;
  std::vector<Rule> rules;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    auto where = "grammar line " + std::to_string(lineno) + ": ";
    if (line.rfind("start:", 0) == 0) {
      start = trim(line.substr(6));
      if (start.empty() || words_of(start).size() != 1) throw DataError(where + "expected start: SYMBOL");
      continue;
    }
    auto arrow = line.find("->");
    if (arrow == std::string::npos) throw DataError(where + "expected LHS -> RHS");
    auto lhs = words_of(line.substr(0, arrow));
    if (lhs.size() != 1) throw DataError(where + "left-hand side must be one symbol");
    std::string rest = line.substr(arrow + 2);
    std::size_t pos = 0;
    for (;;) {
      auto bar = rest.find('|', pos);
      auto alt = words_of(rest.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos));
      if (alt.empty()) throw DataError(where + "empty right-hand side (epsilon rules are not supported)");
      rules.push_back({lhs[0], alt});
      if (bar == std::string::npos) break;
      pos = bar + 1;
    }
  }
  if (rules.empty()) throw DataError("grammar has no rules");
  if (start.empty()) start = rules.front().lhs;
  return Grammar(start, std::move(rules));
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_grammar(ss.str());
}

std::vector<std::string> Tree::words() const {
  if (leaf()) return {label};
  std::vector<std::string> out;
  for (const auto& c : children) {
    auto w = c.words();
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

Tree parse_tree(const std::string& text) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto token = [&] {
    std::size_t b = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '(' && text[i] != ')') ++i;
    return text.substr(b, i - b);
  };
  auto fail = [&](const std::string& msg) { throw DataError("tree at offset " + std::to_string(i) + ": " + msg); };
  std::function<Tree()> node = [&]() -> Tree {
    skip();
    if (i >= text.size()) fail("unexpected end");
    if (text[i] == ')') fail("unexpected ')'");
    if (text[i] != '(') return Tree{token(), {}};
    ++i;
    skip();
    Tree t{token(), {}};
    if (t.label.empty()) fail("missing label");
    for (;;) {
      skip();
      if (i >= text.size()) fail("unbalanced parentheses");
      if (text[i] == ')') {
        ++i;
        break;
      }
      t.children.push_back(node());
    }
    if (t.children.empty()) fail("node " + t.label + " has no children");
    return t;
  };
  Tree t = node();
  skip();
  if (i != text.size()) fail("trailing text");
  if (t.leaf()) fail("a tree must be bracketed");
  return t;
}

std::string to_string(const Tree& t) {
  if (t.leaf()) return t.label;
  std::string out = "(" + t.label;
  for (const auto& c : t.children) out += " " + to_string(c);
  return out + ")";
}

std::vector<Tree> read_trees(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<Tree> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_tree(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Term tree_term(const Tree& t) {
  if (t.leaf()) return Term::atom(t.label);
  std::vector<Term> cs;
  for (const auto& c : t.children) cs.push_back(tree_term(c));
  return Term::compound("tree", {Term::atom(t.label), Term::list(cs)});
}

Tree tree_from_term(const Term& t) {
  if (t.is_atomic()) return Tree{symbol_name(t), {}};
  if (!t.is_compound() || t.functor().name() != "tree" || t.arity() != 2)
    throw DataError("not a tree term: " + to_string(t));
  Tree out{symbol_name(t.arg(0)), {}};
  auto items = t.arg(1).list_items();
  if (!items) throw DataError("not a tree term: " + to_string(t));
  for (const auto& c : *items) out.children.push_back(tree_from_term(c));
  return out;
}

CfgPrograms generate_cfg_programs(const Grammar& g) {
  std::ostringstream facts;
  facts << "start_symbol(" << atom(g.start()) << ").\n";
  for (const auto& t : g.terminals()) facts << "terminal(" << atom(t) << ").\n";

  std::ostringstream td;
  td << facts.str();
  for (const auto& a : g.nonterminals()) {
    td << "values(" << atom(a) << ",[";
    auto rs = g.rules_for(a);
    for (std::size_t i = 0; i < rs.size(); ++i) td << (i ? "," : "") << atom_list(rs[i]->rhs);
    td << "]).\n";
  }
  td << "\n" << kTopdownParser;

  std::ostringstream lc;
  lc << facts.str();
  const auto& corners = g.left_corners();
  bool any_reachable = false;
  for (const auto& a : g.nonterminals())
    for (const auto& b : corners.at(a))
      if (!g.is_terminal(b)) {
        lc << "reachable(" << atom(a) << "," << atom(b) << ").\n";
        any_reachable = true;
      }
  if (!any_reachable) lc << "reachable(_,_):- fail.\n";

  std::vector<std::string> symbols = g.nonterminals();
  symbols.insert(symbols.end(), g.terminals().begin(), g.terminals().end());
  for (const auto& gs : g.nonterminals()) {
    std::vector<std::string> first;
    for (const auto& t : g.terminals())
      if (corners.at(gs).count(t)) first.push_back(t);
    if (!first.empty()) lc << "values(first(" << atom(gs) << ")," << atom_list(first) << ").\n";
  }
  for (const auto& gs : g.nonterminals())
    for (const auto& b : symbols) {
      std::vector<std::string> outs;
      for (const auto& r : g.rules())
        if (r.rhs[0] == b && (r.lhs == gs || corners.at(gs).count(r.lhs)))
          outs.push_back("rule(" + atom(r.lhs) + "," + atom_list(r.rhs) + ")");
      if (outs.empty()) continue;
      lc << "values(lc(" << atom(gs) << "," << atom(b) << "),[";
      for (std::size_t i = 0; i < outs.size(); ++i) lc << (i ? "," : "") << outs[i];
      lc << "]).\n";
    }
  for (const auto& a : g.nonterminals())
    if (g.left_recursive(a)) lc << "values(attach(" << atom(a) << "),[attach,project]).\n";
  lc << "\n" << kLeftCornerParser;

  return {td.str(), lc.str()};
}

TreeGoals encode_tree(const Grammar& g, const Tree& t) {
  if (t.leaf()) throw DataError("a tree must have a root node");
  if (t.label != g.start()) throw DataError("tree root " + t.label + " is not the start symbol " + g.start());
  std::function<void(const Tree&)> check = [&](const Tree& n) {
    if (n.leaf()) {
      if (!g.is_terminal(n.label)) throw DataError("leaf " + n.label + " is not a terminal");
      return;
    }
    std::vector<std::string> rhs;
    for (const auto& c : n.children) rhs.push_back(c.label);
    if (!g.has_rule(n.label, rhs)) {
      std::string r = n.label + " ->";
      for (const auto& s : rhs) r += " " + s;
      throw DataError("unknown rule in tree: " + r);
    }
    for (const auto& c : n.children) check(c);
  };
  check(t);
  Term ws = word_list(t.words());
  Term tt = tree_term(t);
  return {Term::compound("parse", {ws, tt}), Term::compound("plcg", {ws, tt}), Term::compound("parse", {ws}),
          Term::compound("plcg", {ws})};
}

Term sentence_goal(const std::vector<std::string>& words, bool leftcorner) {
  if (words.empty()) throw DataError("empty sentence");
  return Term::compound(leftcorner ? "plcg" : "parse", {word_list(words)});
}

Tree decode_topdown(const Grammar& g, const ViterbiResult& r) {
  std::size_t pos = 0;
  std::function<Tree(const std::string&)> build = [&](const std::string& a) -> Tree {
    if (pos >= r.sequence.size()) throw DataError("decode: msw sequence ended early");
    const auto& [sw, out] = r.sequence[pos++];
    if (!sw.is_atomic() || symbol_name(sw) != a) throw DataError("decode: expected a choice for " + a);
    Tree t{a, {}};
    for (const auto& s : symbol_list(out)) t.children.push_back(g.is_terminal(s) ? Tree{s, {}} : build(s));
    return t;
  };
  Tree t = build(g.start());
  if (pos != r.sequence.size()) throw DataError("decode: unused msw choices");
  return t;
}

Tree decode_leftcorner(const Grammar& g, const std::vector<std::string>& words, const ViterbiResult& r) {
  std::size_t pos = 0, wi = 0;
  auto next = [&](const char* fn) -> const Term& {
    if (pos >= r.sequence.size()) throw DataError("decode: msw sequence ended early");
    const auto& [sw, out] = r.sequence[pos++];
    if (!sw.is_compound() || sw.functor().name() != fn) throw DataError(std::string("decode: expected a ") + fn + " choice");
    return out;
  };
  std::function<std::vector<Tree>(const std::vector<std::string>&)> g_call;
  std::function<Tree(const std::string&, Tree)> lc_call = [&](const std::string& gs, Tree tb) -> Tree {
    for (;;) {
      const Term& rule = next("lc");
      std::string a = symbol_name(rule.arg(0));
      auto rhs = symbol_list(rule.arg(1));
      Tree ta{a, {std::move(tb)}};
      auto rest = g_call(std::vector<std::string>(rhs.begin() + 1, rhs.end()));
      for (auto& c : rest) ta.children.push_back(std::move(c));
      if (gs == a) {
        bool attach = true;
        if (g.left_recursive(a)) attach = symbol_name(next("attach")) == "attach";
        if (attach) return ta;
      }
      tb = std::move(ta);
    }
  };
  g_call = [&](const std::vector<std::string>& goals) {
    std::vector<Tree> out;
    for (const auto& gs : goals) {
      if (wi >= words.size()) throw DataError("decode: ran out of words");
      if (g.is_terminal(gs)) {
        out.push_back(Tree{words[wi++], {}});
        continue;
      }
      std::string wd = symbol_name(next("first"));
      ++wi;
      out.push_back(lc_call(gs, Tree{wd, {}}));
    }
    return out;
  };
  auto ts = g_call({g.start()});
  if (pos != r.sequence.size() || wi != words.size()) throw DataError("decode: sequence does not cover the sentence");
  return ts.front();
}

std::vector<Instance> tree_instances(const Grammar& g, const std::vector<Tree>& trees, bool leftcorner) {
  std::vector<Instance> out;
  for (const auto& t : trees) {
    auto goals = encode_tree(g, t);
    out.push_back(leftcorner ? Instance{goals.leftcorner, goals.sentence_lc} : Instance{goals.topdown, goals.sentence});
  }
  return out;
}

Pcfg Pcfg::random(const Grammar& g, std::mt19937_64& rng, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Pcfg p;
  p.grammar = &g;
  for (const auto& a : g.nonterminals()) {
    auto& v = p.probs[a];
    double s = 0;
    for (std::size_t i = 0; i < g.rules_for(a).size(); ++i) {
      v.push_back(gamma(rng) + 1e-9);
      s += v.back();
    }
    for (auto& x : v) x /= s;
  }
  return p;
}

Tree Pcfg::sample(std::mt19937_64& rng, std::size_t max_words) const {
  struct TooLong {};
  for (int attempt = 0; attempt < 100000; ++attempt) {
    // Every pending symbol yields at least one word (no epsilon rules).
    std::size_t reserved = 1;
    std::function<Tree(const std::string&)> expand = [&](const std::string& a) -> Tree {
      const auto& ps = probs.at(a);
      std::discrete_distribution<std::size_t> d(ps.begin(), ps.end());
      const Rule* r = grammar->rules_for(a)[d(rng)];
      reserved += r->rhs.size() - 1;
      if (reserved > max_words) throw TooLong{};
      Tree t{a, {}};
      for (const auto& s : r->rhs) {
        if (grammar->is_terminal(s)) {
          t.children.push_back(Tree{s, {}});
        } else {
          t.children.push_back(expand(s));
        }
      }
      return t;
    };
    try {
      return expand(grammar->start());
    } catch (const TooLong&) {
    }
  }
  throw DataError("could not sample a tree within the word limit");
}

}  // namespace tcrf::zoo
