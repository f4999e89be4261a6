#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tcrf/counts.hpp"
#include "tcrf/engine.hpp"
#include "tcrf/params.hpp"

namespace tcrf {

/// Log-weights per graph switch and outcome: [switch id][outcome index].
using SwitchWeights = std::vector<std::vector<double>>;

/// Counts DP work (one unit per derivation item visited).
struct DpCounter {
  std::size_t ops = 0;
};

/// Resolves every switch of the graph against the table (with defaults).
SwitchWeights log_weights(const ExplanationGraph& g, const ParameterTable& params);

/// Log inside value of every node, in node order.
std::vector<double> inside(const ExplanationGraph& g, const SwitchWeights& w, DpCounter* counter = nullptr);
std::vector<double> inside(const ExplanationGraph& g, const ParameterTable& params);

/// Root inside value: log Z in weight mode, log P(G) in probability mode.
double log_inside_root(const ExplanationGraph& g, const ParameterTable& params);

/// log p(y|x) = inside(complete) - inside(incomplete). Checks that the
/// complete graph has exactly one explanation and that it belongs to the
/// incomplete goal's explanations; throws DataError otherwise.
double conditional_log_prob(const ExplanationGraph& complete, const ExplanationGraph& incomplete,
                            const ParameterTable& params);

struct ViterbiResult {
  CountVector explanation;
  Term decode;
  double score = 0.0;
  /// Chosen msws as (switch, outcome), in body execution order.
  std::vector<std::pair<Term, Term>> sequence;
};

/// Max-product DP; ties go to the earliest derivation.
ViterbiResult viterbi(const ExplanationGraph& g, const SwitchWeights& w, DpCounter* counter = nullptr);
ViterbiResult viterbi(const ExplanationGraph& g, const ParameterTable& params);

/// E[σ | G] by inside-outside, shaped like SwitchWeights.
SwitchWeights expected_switch_counts(const ExplanationGraph& g, const SwitchWeights& w,
                                     DpCounter* counter = nullptr);
CountVector expected_counts(const ExplanationGraph& g, const ParameterTable& params);

/// Counts of the unique explanation of a complete goal's graph.
/// Throws DataError when the graph has more than one explanation.
CountVector unique_explanation(const ExplanationGraph& g);

/// log(exp(a) + exp(b)) with -inf handled.
double log_add(double a, double b);

}  // namespace tcrf
