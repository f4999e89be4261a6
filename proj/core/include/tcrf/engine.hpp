#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcrf/counts.hpp"
#include "tcrf/program.hpp"
#include "tcrf/term.hpp"

namespace tcrf {

using NodeId = std::uint32_t;
using SwitchId = std::uint32_t;

/// A switch instance used somewhere in a graph, with its declared outcomes.
struct SwitchInfo {
  Term name;
  std::vector<Term> outcomes;
};

/// One msw(i,v) leaf of a derivation.
struct SwitchOutcome {
  SwitchId sw = 0;            // index into ExplanationGraph::switches()
  std::uint32_t index = 0;    // position of the outcome in the declared list
  friend bool operator==(const SwitchOutcome&, const SwitchOutcome&) = default;
};

/// One successful clause-body resolution of a goal.
///
/// `order` records how subgoals and switches interleave in the body:
/// order[k] is true when the k-th item is the next switch, false when it is
/// the next subgoal.
struct Derivation {
  std::vector<NodeId> subgoals;
  std::vector<SwitchOutcome> switches;
  std::vector<bool> order;
  friend bool operator==(const Derivation&, const Derivation&) = default;
};

struct GoalNode {
  Term goal;
  std::vector<Derivation> derivations;
};

/// Acyclic AND-OR graph of tabled goals; nodes are stored children first.
class ExplanationGraph {
 public:
  ExplanationGraph() = default;
  ExplanationGraph(std::vector<GoalNode> nodes, NodeId root, std::vector<SwitchInfo> switches);

  const std::vector<GoalNode>& nodes() const { return nodes_; }
  const GoalNode& node(NodeId id) const { return nodes_[id]; }
  NodeId root() const { return root_; }
  const GoalNode& root_node() const { return nodes_[root_]; }
  const std::vector<SwitchInfo>& switches() const { return switches_; }

  const Term& switch_name(const SwitchOutcome& s) const { return switches_[s.sw].name; }
  const Term& outcome(const SwitchOutcome& s) const { return switches_[s.sw].outcomes[s.index]; }

  /// Total number of derivations and of derivation items (graph size).
  std::size_t num_derivations() const;
  std::size_t size() const;

  /// Throws CyclicExplanation if a derivation refers to a node that does not
  /// precede its parent.
  void check_topological() const;

 private:
  std::vector<GoalNode> nodes_;
  NodeId root_ = 0;
  std::vector<SwitchInfo> switches_;
};

struct SolveOptions {
  std::size_t max_steps = 1'000'000;
  bool occurs_check = true;
};

struct SolveStats {
  std::size_t resolution_steps = 0;  // head unifications + answer consumptions + msw outcome tries
  std::size_t tables = 0;
  std::size_t answers = 0;
};

/// Tabled exhaustive search for all explanations of `query`.
///
/// Returns nullopt when the query has no proof. Ground queries are rooted at
/// their own node; a query with variables gets a synthetic root whose
/// derivations each select one answer.
std::optional<ExplanationGraph> solve_all(const Program& program, const Term& query,
                                          const SolveOptions& opts = {}, SolveStats* stats = nullptr);

/// Expands the graph into its explanations, one count vector each.
/// Throws ExplosionError if there are more than `limit`.
std::vector<CountVector> enumerate_explanations(const ExplanationGraph& g, std::size_t limit);

/// Number of explanations, saturating at `cap`.
std::size_t count_explanations(const ExplanationGraph& g, std::size_t cap = SIZE_MAX);

/// Whether `e` is one of the graph's explanations. Works on per-node sets
/// of partial count vectors bounded by `e`; returns nullopt if those sets
/// grow beyond `cap` entries in total.
std::optional<bool> contains_explanation(const ExplanationGraph& g, const CountVector& e,
                                         std::size_t cap = 200000);

/// One node per line: `node <id> <goal> := <derivation>{; <derivation>}`.
std::string dump(const ExplanationGraph& g);

}  // namespace tcrf
