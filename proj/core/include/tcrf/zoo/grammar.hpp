#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tcrf/inference.hpp"
#include "tcrf/learning.hpp"
#include "tcrf/term.hpp"

namespace tcrf::zoo {

struct Rule {
  std::string lhs;
  std::vector<std::string> rhs;
  friend bool operator==(const Rule&, const Rule&) = default;
};

/// A context-free grammar without ε-rules or unit cycles. Terminals are the
/// symbols that never appear on a left-hand side.
class Grammar {
 public:
  /// Throws DataError if the grammar violates an invariant.
  Grammar(std::string start, std::vector<Rule> rules);

  const std::string& start() const { return start_; }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<std::string>& terminals() const { return terminals_; }
  bool is_terminal(const std::string& s) const { return terminal_set_.count(s) != 0; }
  bool has_rule(const std::string& lhs, const std::vector<std::string>& rhs) const;
  /// Rules of one nonterminal, in file order.
  std::vector<const Rule*> rules_for(const std::string& lhs) const;

  /// Non-reflexive transitive closure of the left-corner relation
  /// {(A,B) : A -> B ...}, over all symbols.
  const std::map<std::string, std::set<std::string>>& left_corners() const { return lc_; }
  bool left_recursive(const std::string& a) const;

 private:
  std::string start_;
  std::vector<Rule> rules_;
  std::vector<std::string> nonterminals_, terminals_;
  std::set<std::string> terminal_set_;
  std::map<std::string, std::set<std::string>> lc_;
};

/// `start: S` (optional; defaults to the first rule's lhs), then one rule
/// per line `A -> B C`, alternatives separated by `|`. `#` starts a comment.
Grammar parse_grammar(const std::string& text);
Grammar load_grammar(const std::string& path);

/// Parse tree; a node without children is a terminal leaf.
struct Tree {
  std::string label;
  std::vector<Tree> children;
  bool leaf() const { return children.empty(); }
  std::vector<std::string> words() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

/// Bracketed S-expression, e.g. `(S (S a) a)`.
Tree parse_tree(const std::string& text);
std::string to_string(const Tree& t);
std::vector<Tree> read_trees(const std::string& path);

/// tree(Label,[Children]) with terminal leaves as atoms.
Term tree_term(const Tree& t);
Tree tree_from_term(const Term& t);

struct CfgPrograms {
  std::string topdown;
  std::string leftcorner;
};

/// Top-down parser with msw(A,RHS) rule choices and the left-corner parser
/// pair with first/lc/attach switches.
CfgPrograms generate_cfg_programs(const Grammar& g);

struct TreeGoals {
  Term topdown;      // parse(Ws,T)
  Term leftcorner;   // plcg(Ws,T)
  Term sentence;     // parse(Ws)
  Term sentence_lc;  // plcg(Ws)
};

/// Throws DataError if the tree uses a rule not in the grammar.
TreeGoals encode_tree(const Grammar& g, const Tree& t);
Term sentence_goal(const std::vector<std::string>& words, bool leftcorner = false);

/// Trees rebuilt from a Viterbi msw sequence of parse/1 or plcg/1.
Tree decode_topdown(const Grammar& g, const ViterbiResult& r);
Tree decode_leftcorner(const Grammar& g, const std::vector<std::string>& words, const ViterbiResult& r);

/// Training instances over trees, for either parser.
std::vector<Instance> tree_instances(const Grammar& g, const std::vector<Tree>& trees, bool leftcorner = false);

/// Rule probabilities for sampling.
struct Pcfg {
  const Grammar* grammar = nullptr;
  std::map<std::string, std::vector<double>> probs;  // per lhs, aligned with rules_for

  static Pcfg random(const Grammar& g, std::mt19937_64& rng, double alpha = 1.0);
  /// Samples trees until one with at most `max_words` words comes out.
  Tree sample(std::mt19937_64& rng, std::size_t max_words) const;
};

}  // namespace tcrf::zoo
