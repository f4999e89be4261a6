#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tcrf/counts.hpp"
#include "tcrf/engine.hpp"
#include "tcrf/inference.hpp"
#include "tcrf/params.hpp"
#include "tcrf/program.hpp"
#include "tcrf/report.hpp"

namespace tcrf {

/// A training item: the complete goal G_{x,y} (optional for EM) and the
/// incomplete goal G_x.
struct Instance {
  std::optional<Term> complete;
  Term incomplete;
};

enum class Method { Counting, Em, Lbfgs };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct TrainConfig {
  Method method = Method::Lbfgs;
  double mu = 1.0;
  std::size_t lbfgs_memory = 10;
  double grad_tol = 1e-5;
  std::size_t max_iters = 1000;
  double em_tol = 1e-8;
  double smoothing = 0.0;
  bool perturb = false;  // break symmetric EM starts
  std::size_t threads = 1;
  SolveOptions solve;
};

/// Explanation graphs keyed by ground goal; built once per dataset.
class GraphCache {
 public:
  explicit GraphCache(const Program& program, SolveOptions opts = {}) : program_(program), opts_(opts) {}

  /// Graph of `goal`; throws DataError if the goal has no proof.
  std::shared_ptr<const ExplanationGraph> get(const Term& goal);

  const Program& program() const { return program_; }
  std::size_t size() const;

 private:
  const Program& program_;
  SolveOptions opts_;
  mutable std::mutex mu_;
  std::unordered_map<Term, std::shared_ptr<const ExplanationGraph>, TermHash> graphs_;
};

/// θ_{i,v} = (count(i,v) + s) / (count(i) + s·|V_i|) over the unique
/// explanations of the complete goals. Switches never observed keep the
/// uniform default; with s = 0 that produces a warning.
ParameterTable count_mle(const Program& program, const std::vector<Instance>& data, double smoothing,
                         std::vector<std::string>* warnings = nullptr, GraphCache* cache = nullptr);

/// EM over the incomplete goals' graphs. With smoothing s > 0 the M-step is
/// the MAP update above and the traced objective includes Σ s·log θ.
std::pair<ParameterTable, FitReport> em_fit(const Program& program, const std::vector<Instance>& data,
                                            const ParameterTable& init, const TrainConfig& cfg,
                                            GraphCache* cache = nullptr);

/// Regularized conditional log-likelihood over a fixed dataset, with
/// graphs compiled once and λ supplied as a flat vector.
class CllProblem {
 public:
  CllProblem(const Program& program, const std::vector<Instance>& data, double mu, std::size_t threads = 1,
             GraphCache* cache = nullptr, SolveOptions opts = {});

  std::size_t dim() const { return keys_.size(); }
  /// (switch, outcome) of each coordinate.
  const std::vector<std::pair<Term, Term>>& keys() const { return keys_; }

  /// −l(λ|D) and its gradient.
  double evaluate(const std::vector<double>& lambda, std::vector<double>& grad) const;

  ParameterTable to_table(const std::vector<double>& lambda) const;
  std::vector<double> from_table(const ParameterTable& t) const;

 private:
  struct Item {
    std::shared_ptr<const ExplanationGraph> incomplete;
    std::vector<std::vector<std::size_t>> index;            // [graph switch][outcome] -> coordinate
    std::vector<std::pair<std::size_t, double>> observed;   // σ(E_t) as (coordinate, count)
    Term goal;
  };
  double instance_term(const Item& it, const std::vector<double>& lambda,
                       std::vector<std::pair<std::size_t, double>>& grad) const;

  double mu_;
  std::size_t threads_;
  std::vector<Item> items_;
  std::vector<std::pair<Term, Term>> keys_;
  std::vector<std::size_t> switch_of_key_;
  std::vector<std::pair<Term, std::vector<Term>>> switches_;
};

/// −l(λ|D) and its gradient as a count vector.
std::pair<double, CountVector> cll_objective(const Program& program, const std::vector<Instance>& data,
                                             const ParameterTable& lambda, double mu);

/// L-BFGS on the regularized CLL, starting from λ = 0.
std::pair<ParameterTable, FitReport> train_crf(const Program& program, const std::vector<Instance>& data,
                                               const TrainConfig& cfg, GraphCache* cache = nullptr);

}  // namespace tcrf
