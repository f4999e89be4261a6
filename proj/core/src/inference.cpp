#include "tcrf/inference.hpp"

#include <cmath>
#include <limits>

#include "tcrf/errors.hpp"

namespace tcrf {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double derivation_inside(const Derivation& d, const SwitchWeights& w, const std::vector<double>& in) {
  double s = 0.0;
  for (const auto& sw : d.switches) s += w[sw.sw][sw.index];
  for (NodeId c : d.subgoals) s += in[c];
  return s;
}
}  // namespace

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

SwitchWeights log_weights(const ExplanationGraph& g, const ParameterTable& params) {
  SwitchWeights w(g.switches().size());
  for (std::size_t s = 0; s < w.size(); ++s) {
    const auto& info = g.switches()[s];
    w[s].resize(info.outcomes.size());
    for (std::size_t i = 0; i < info.outcomes.size(); ++i) w[s][i] = params.log_weight(info.name, info.outcomes, i);
  }
  return w;
}

std::vector<double> inside(const ExplanationGraph& g, const SwitchWeights& w, DpCounter* counter) {
  const auto& nodes = g.nodes();
  std::vector<double> in(nodes.size(), kNegInf);
  std::vector<double> terms;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    terms.clear();
    double mx = kNegInf;
    for (const auto& d : nodes[i].derivations) {
      for (NodeId c : d.subgoals)
        if (c >= i) throw CyclicExplanation("inside: graph not topologically ordered");
      double v = derivation_inside(d, w, in);
      if (counter) counter->ops += 1 + d.subgoals.size() + d.switches.size();
      if (std::isnan(v)) throw NumericError("NaN inside value at " + to_string(nodes[i].goal));
      terms.push_back(v);
      if (v > mx) mx = v;
    }
    if (mx == kNegInf) continue;
    if (mx == std::numeric_limits<double>::infinity()) throw NumericError("infinite inside value");
    double s = 0.0;
    for (double v : terms) s += std::exp(v - mx);
    in[i] = mx + std::log(s);
  }
  return in;
}

std::vector<double> inside(const ExplanationGraph& g, const ParameterTable& params) {
  return inside(g, log_weights(g, params));
}

double log_inside_root(const ExplanationGraph& g, const ParameterTable& params) {
  return inside(g, params)[g.root()];
}

CountVector unique_explanation(const ExplanationGraph& g) {
  std::size_t n = count_explanations(g, 2);
  if (n != 1)
    throw DataError("complete goal " + to_string(g.root_node().goal) + " has " + (n > 1 ? "more than one" : "no") +
                    " explanation");
  return enumerate_explanations(g, 1).front();
}

double conditional_log_prob(const ExplanationGraph& complete, const ExplanationGraph& incomplete,
                            const ParameterTable& params) {
  CountVector e = unique_explanation(complete);
  std::optional<bool> in = contains_explanation(incomplete, e);
  if (in && !*in)
    throw DataError("explanation of " + to_string(complete.root_node().goal) + " is not among those of " +
                    to_string(incomplete.root_node().goal));
  double num = log_inside_root(complete, params);
  double den = log_inside_root(incomplete, params);
  if (den == kNegInf) throw NumericError("incomplete goal " + to_string(incomplete.root_node().goal) + " has zero weight");
  double lp = num - den;
  if (lp > 1e-9)
    throw DataError("complete explanation of " + to_string(complete.root_node().goal) +
                    " is not among the explanations of " + to_string(incomplete.root_node().goal));
  return lp;
}

ViterbiResult viterbi(const ExplanationGraph& g, const SwitchWeights& w, DpCounter* counter) {
  const auto& nodes = g.nodes();
  std::vector<double> best(nodes.size(), kNegInf);
  std::vector<std::size_t> choice(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& ders = nodes[i].derivations;
    for (std::size_t k = 0; k < ders.size(); ++k) {
      for (NodeId c : ders[k].subgoals)
        if (c >= i) throw CyclicExplanation("viterbi: graph not topologically ordered");
      double v = derivation_inside(ders[k], w, best);
      if (counter) counter->ops += 1 + ders[k].subgoals.size() + ders[k].switches.size();
      if (std::isnan(v)) throw NumericError("NaN Viterbi score at " + to_string(nodes[i].goal));
      if (k == 0 || v > best[i]) {
        best[i] = v;
        choice[i] = k;
      }
    }
  }

  ViterbiResult r;
  r.score = best[g.root()];

  // Walk the chosen tree in execution order.
  struct Item {
    NodeId node;
    std::size_t pos = 0, si = 0, gi = 0;
  };
  std::vector<Item> stack{{g.root()}};
  while (!stack.empty()) {
    Item& it = stack.back();
    const Derivation& d = nodes[it.node].derivations[choice[it.node]];
    if (it.pos == d.order.size()) {
      stack.pop_back();
      continue;
    }
    if (d.order[it.pos++]) {
      const auto& s = d.switches[it.si++];
      r.sequence.emplace_back(g.switch_name(s), g.outcome(s));
      r.explanation.add(g.switch_name(s), g.outcome(s), 1.0);
    } else {
      NodeId c = d.subgoals[it.gi++];
      stack.push_back({c});
    }
  }

  NodeId n = g.root();
  for (;;) {
    const Derivation& d = nodes[n].derivations[choice[n]];
    if (d.subgoals.size() == 1 && d.switches.empty())
      n = d.subgoals.front();
    else
      break;
  }
  r.decode = nodes[n].goal;
  return r;
}

ViterbiResult viterbi(const ExplanationGraph& g, const ParameterTable& params) {
  return viterbi(g, log_weights(g, params));
}

SwitchWeights expected_switch_counts(const ExplanationGraph& g, const SwitchWeights& w, DpCounter* counter) {
  const auto& nodes = g.nodes();
  std::vector<double> in = inside(g, w, counter);
  double z = in[g.root()];
  if (z == kNegInf) throw NumericError("expected counts: goal " + to_string(g.root_node().goal) + " has zero weight");

  SwitchWeights out(w.size());
  for (std::size_t s = 0; s < w.size(); ++s) out[s].assign(w[s].size(), 0.0);

  std::vector<double> outside(nodes.size(), kNegInf);
  outside[g.root()] = 0.0;
  for (std::size_t i = g.root() + 1; i-- > 0;) {
    if (outside[i] == kNegInf) continue;
    for (const auto& d : nodes[i].derivations) {
      if (counter) counter->ops += 1 + d.subgoals.size() + d.switches.size();
      double t = outside[i] + derivation_inside(d, w, in);
      if (t == kNegInf) continue;
      double p = std::exp(t - z);
      for (const auto& s : d.switches) out[s.sw][s.index] += p;
      for (NodeId c : d.subgoals) outside[c] = log_add(outside[c], t - in[c]);
    }
  }
  return out;
}

CountVector expected_counts(const ExplanationGraph& g, const ParameterTable& params) {
  SwitchWeights e = expected_switch_counts(g, log_weights(g, params));
  CountVector cv;
  for (std::size_t s = 0; s < e.size(); ++s)
    for (std::size_t i = 0; i < e[s].size(); ++i)
      if (e[s][i] != 0.0) cv.add(g.switches()[s].name, g.switches()[s].outcomes[i], e[s][i]);
  return cv;
}

}  // namespace tcrf
