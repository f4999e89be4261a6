#include "tcrf/learning.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "tcrf/errors.hpp"
#include "tcrf/lbfgs.hpp"

namespace tcrf {

std::string to_string(Method m) {
  switch (m) {
    case Method::Counting: return "counting";
    case Method::Em: return "em";
    case Method::Lbfgs: return "lbfgs";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "counting") return Method::Counting;
  if (s == "em") return Method::Em;
  if (s == "lbfgs") return Method::Lbfgs;
  throw std::invalid_argument("unknown method '" + s + "' (expected counting, em or lbfgs)");
}

std::shared_ptr<const ExplanationGraph> GraphCache::get(const Term& goal) {
  {
    std::lock_guard lock(mu_);
    auto it = graphs_.find(goal);
    if (it != graphs_.end()) return it->second;
  }
  auto g = solve_all(program_, goal, opts_);
  if (!g) throw DataError("goal " + to_string(goal) + " has no proof");
  auto ptr = std::make_shared<const ExplanationGraph>(std::move(*g));
  std::lock_guard lock(mu_);
  return graphs_.emplace(goal, ptr).first->second;
}

std::size_t GraphCache::size() const {
  std::lock_guard lock(mu_);
  return graphs_.size();
}

namespace {

// Accumulates per-switch count vectors aligned with the declared outcomes.
struct SwitchCounts {
  std::map<Term, std::pair<std::vector<Term>, std::vector<double>>, TermLess> map;

  std::vector<double>& at(const Term& sw, const std::vector<Term>& outcomes) {
    auto it = map.find(sw);
    if (it == map.end()) it = map.emplace(sw, std::make_pair(outcomes, std::vector<double>(outcomes.size(), 0.0))).first;
    return it->second.second;
  }
};

ParameterTable normalize(const SwitchCounts& c, double smoothing, std::vector<std::string>* warnings) {
  ParameterTable t(ParamMode::Probability);
  for (const auto& [sw, oc] : c.map) {
    const auto& [outcomes, counts] = oc;
    double total = 0.0;
    for (double x : counts) total += x;
    double denom = total + smoothing * double(counts.size());
    std::vector<double> theta(counts.size());
    if (denom <= 0.0) {
      if (warnings) warnings->push_back("switch " + to_string(sw) + " never observed; left uniform");
      theta.assign(counts.size(), 1.0 / double(counts.size()));
    } else {
      for (std::size_t i = 0; i < counts.size(); ++i) theta[i] = (counts[i] + smoothing) / denom;
    }
    t.set(sw, outcomes, std::move(theta));
  }
  return t;
}

}  // namespace

ParameterTable count_mle(const Program& program, const std::vector<Instance>& data, double smoothing,
                         std::vector<std::string>* warnings, GraphCache* cache) {
  if (smoothing < 0) throw std::invalid_argument("smoothing must be nonnegative");
  GraphCache local(program);
  GraphCache& gc = cache ? *cache : local;
  SwitchCounts c;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!data[t].complete) throw DataError("instance " + std::to_string(t) + " has no complete goal");
    auto g = gc.get(*data[t].complete);
    // Register every switch of the graph so observed-but-unused outcomes get smoothed.
    for (const auto& s : g->switches()) c.at(s.name, s.outcomes);
    CountVector e = unique_explanation(*g);
    for (const auto& [key, cnt] : e) {
      const SwitchDecl* d = program.find_switch(key.first);
      auto& v = c.at(key.first, d->outcomes);
      v[*d->index_of(key.second)] += cnt;
    }
  }
  // Ground declarations never touched by the data.
  for (const auto& d : program.switch_decls())
    if (d.pattern.ground() && !c.map.count(d.pattern)) {
      c.at(d.pattern, d.outcomes);
    }
  return normalize(c, smoothing, warnings);
}

std::pair<ParameterTable, FitReport> em_fit(const Program& program, const std::vector<Instance>& data,
                                            const ParameterTable& init, const TrainConfig& cfg, GraphCache* cache) {
  if (init.mode() != ParamMode::Probability) throw std::invalid_argument("EM needs a probability-mode table");
  GraphCache local(program, cfg.solve);
  GraphCache& gc = cache ? *cache : local;
  std::vector<std::shared_ptr<const ExplanationGraph>> graphs;
  for (const auto& inst : data) graphs.push_back(gc.get(inst.incomplete));

  // Starting point: the supplied table, completed with uniform (optionally
  // perturbed) vectors for switches it does not cover.
  ParameterTable theta = init;
  std::size_t sidx = 0;
  for (const auto& g : graphs)
    for (const auto& s : g->switches()) {
      if (theta.find(s.name)) continue;
      std::size_t k = s.outcomes.size();
      std::vector<double> v(k, 1.0 / double(k));
      if (cfg.perturb) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += v[i] = 1.0 + 1e-3 * double((i + sidx) % k + 1);
        for (double& x : v) x /= sum;
      }
      ++sidx;
      theta.set(s.name, s.outcomes, std::move(v));
    }

  FitReport rep;
  rep.method = "em";
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0;; ++iter) {
    SwitchCounts c;
    double ll = 0.0;
    for (std::size_t t = 0; t < graphs.size(); ++t) {
      const auto& g = *graphs[t];
      SwitchWeights w = log_weights(g, theta);
      std::vector<double> in = inside(g, w);
      double lp = in[g.root()];
      if (!std::isfinite(lp))
        throw DataError("instance " + std::to_string(t) + " (" + to_string(data[t].incomplete) +
                        ") has zero probability under the current parameters");
      ll += lp;
      SwitchWeights e = expected_switch_counts(g, w);
      for (std::size_t s = 0; s < e.size(); ++s) {
        auto& acc = c.at(g.switches()[s].name, g.switches()[s].outcomes);
        for (std::size_t i = 0; i < e[s].size(); ++i) acc[i] += e[s][i];
      }
    }
    if (cfg.smoothing > 0) {
      for (const auto& [sw, oc] : c.map)
        for (std::size_t i = 0; i < oc.first.size(); ++i) ll += cfg.smoothing * theta.log_weight(sw, oc.first, i);
    }
    rep.objective_trace.push_back(ll);
    rep.final_objective = ll;
    if (iter > 0 && ll - prev < cfg.em_tol) {
      rep.converged = true;
      rep.message = "log-likelihood improvement below tolerance";
      break;
    }
    if (iter >= cfg.max_iters) {
      rep.message = "maximum iterations reached";
      break;
    }
    prev = ll;
    ParameterTable next = normalize(c, cfg.smoothing, nullptr);
    // Keep entries for switches absent from every graph.
    for (const auto& [sw, e] : theta.entries())
      if (!next.find(sw)) next.set(sw, e.outcomes, e.values);
    theta = std::move(next);
    rep.iterations = iter + 1;
  }
  return {std::move(theta), std::move(rep)};
}

CllProblem::CllProblem(const Program& program, const std::vector<Instance>& data, double mu, std::size_t threads,
                       GraphCache* cache, SolveOptions opts)
    : mu_(mu), threads_(std::max<std::size_t>(1, threads)) {
  if (mu < 0) throw std::invalid_argument("mu must be nonnegative");
  GraphCache local(program, opts);
  GraphCache& gc = cache ? *cache : local;

  std::unordered_map<Term, std::size_t, TermHash> switch_index;
  auto coords_of = [&](const SwitchInfo& s) -> std::size_t {
    auto [it, fresh] = switch_index.try_emplace(s.name, switches_.size());
    if (fresh) {
      switches_.emplace_back(s.name, s.outcomes);
    }
    return it->second;
  };
  // First pass: collect switches to fix the coordinate layout.
  std::vector<std::shared_ptr<const ExplanationGraph>> inc, comp;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!data[t].complete) throw DataError("instance " + std::to_string(t) + " has no complete goal");
    comp.push_back(gc.get(*data[t].complete));
    inc.push_back(gc.get(data[t].incomplete));
    for (const auto& s : inc.back()->switches()) coords_of(s);
  }
  std::vector<std::size_t> first_coord(switches_.size());
  for (std::size_t s = 0; s < switches_.size(); ++s) {
    first_coord[s] = keys_.size();
    for (const auto& o : switches_[s].second) {
      keys_.emplace_back(switches_[s].first, o);
      switch_of_key_.push_back(s);
    }
  }

  for (std::size_t t = 0; t < data.size(); ++t) {
    Item it;
    it.goal = data[t].incomplete;
    it.incomplete = inc[t];
    for (const auto& s : inc[t]->switches()) {
      std::size_t base = first_coord[switch_index.at(s.name)];
      std::vector<std::size_t> idx(s.outcomes.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = base + i;
      it.index.push_back(std::move(idx));
    }
    CountVector e = unique_explanation(*comp[t]);
    auto contained = contains_explanation(*inc[t], e);
    if (contained && !*contained)
      throw DataError("explanation of " + to_string(*data[t].complete) + " is not among those of " +
                      to_string(data[t].incomplete));
    for (const auto& [key, cnt] : e) {
      auto sit = switch_index.find(key.first);
      if (sit == switch_index.end())
        throw DataError("explanation of " + to_string(*data[t].complete) + " uses switch " + to_string(key.first) +
                        " absent from the graph of " + to_string(data[t].incomplete));
      const auto& outs = switches_[sit->second].second;
      std::size_t k = 0;
      while (k < outs.size() && !(outs[k] == key.second)) ++k;
      it.observed.emplace_back(first_coord[sit->second] + k, cnt);
    }
    items_.push_back(std::move(it));
  }
}

double CllProblem::instance_term(const Item& it, const std::vector<double>& lambda,
                                 std::vector<std::pair<std::size_t, double>>& grad) const {
  const auto& g = *it.incomplete;
  SwitchWeights w(it.index.size());
  for (std::size_t s = 0; s < w.size(); ++s) {
    w[s].resize(it.index[s].size());
    for (std::size_t i = 0; i < w[s].size(); ++i) w[s][i] = lambda[it.index[s][i]];
  }
  std::vector<double> in = inside(g, w);
  double logz = in[g.root()];
  double score = 0.0;
  for (const auto& [k, c] : it.observed) score += c * lambda[k];
  double lp = score - logz;
  if (!std::isfinite(lp)) throw NumericError("non-finite conditional log-probability for " + to_string(it.goal));
  if (lp > 1e-9)
    throw DataError("complete explanation is not among the explanations of " + to_string(it.goal));
  grad.clear();
  for (const auto& [k, c] : it.observed) grad.emplace_back(k, -c);
  SwitchWeights e = expected_switch_counts(g, w);
  for (std::size_t s = 0; s < e.size(); ++s)
    for (std::size_t i = 0; i < e[s].size(); ++i)
      if (e[s][i] != 0.0) grad.emplace_back(it.index[s][i], e[s][i]);
  return -lp;
}

double CllProblem::evaluate(const std::vector<double>& lambda, std::vector<double>& grad) const {
  if (lambda.size() != dim()) throw std::invalid_argument("lambda has wrong dimension");
  grad.assign(dim(), 0.0);
  std::vector<double> terms(items_.size());
  std::vector<std::vector<std::pair<std::size_t, double>>> parts(items_.size());

  std::size_t nt = std::min(threads_, std::max<std::size_t>(1, items_.size()));
  if (nt <= 1) {
    for (std::size_t t = 0; t < items_.size(); ++t) terms[t] = instance_term(items_[t], lambda, parts[t]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (std::size_t w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < items_.size(); t += nt) terms[t] = instance_term(items_[t], lambda, parts[t]);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }

  // Reduction in instance order keeps results independent of thread count.
  double f = 0.0;
  for (std::size_t t = 0; t < items_.size(); ++t) {
    f += terms[t];
    for (const auto& [k, v] : parts[t]) grad[k] += v;
  }
  for (std::size_t k = 0; k < dim(); ++k) {
    f += 0.5 * mu_ * lambda[k] * lambda[k];
    grad[k] += mu_ * lambda[k];
  }
  return f;
}

ParameterTable CllProblem::to_table(const std::vector<double>& lambda) const {
  ParameterTable t(ParamMode::Weight);
  std::size_t k = 0;
  for (const auto& [sw, outs] : switches_) {
    std::vector<double> v(lambda.begin() + std::ptrdiff_t(k), lambda.begin() + std::ptrdiff_t(k + outs.size()));
    t.set(sw, outs, std::move(v));
    k += outs.size();
  }
  return t;
}

std::vector<double> CllProblem::from_table(const ParameterTable& t) const {
  std::vector<double> x(dim(), 0.0);
  std::size_t k = 0;
  for (const auto& [sw, outs] : switches_) {
    for (std::size_t i = 0; i < outs.size(); ++i) x[k + i] = t.mode() == ParamMode::Weight ? t.value(sw, outs, i) : t.log_weight(sw, outs, i);
    k += outs.size();
  }
  return x;
}

std::pair<double, CountVector> cll_objective(const Program& program, const std::vector<Instance>& data,
                                             const ParameterTable& lambda, double mu) {
  CllProblem p(program, data, mu);
  std::vector<double> x = p.from_table(lambda), g;
  double f = p.evaluate(x, g);
  CountVector cv;
  for (std::size_t k = 0; k < p.dim(); ++k) cv.add(p.keys()[k].first, p.keys()[k].second, g[k]);
  return {f, cv};
}

std::pair<ParameterTable, FitReport> train_crf(const Program& program, const std::vector<Instance>& data,
                                               const TrainConfig& cfg, GraphCache* cache) {
  CllProblem p(program, data, cfg.mu, cfg.threads, cache, cfg.solve);
  if (p.dim() == 0) {
    FitReport r;
    r.method = "lbfgs";
    std::vector<double> g;
    r.final_objective = p.evaluate({}, g);
    r.objective_trace.push_back(r.final_objective);
    r.converged = true;
    r.message = "no free parameters";
    return {ParameterTable(ParamMode::Weight), r};
  }
  LbfgsOptions o;
  o.memory = cfg.lbfgs_memory;
  o.grad_tol = cfg.grad_tol;
  o.max_iters = cfg.max_iters;
  auto res = lbfgs_minimize([&](const std::vector<double>& x, std::vector<double>& g) { return p.evaluate(x, g); },
                            std::vector<double>(p.dim(), 0.0), o);
  return {p.to_table(res.x), std::move(res.report)};
}

}  // namespace tcrf
