#include "tcrf/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "tcrf/errors.hpp"
#include "tcrf/parser.hpp"

namespace tcrf {

namespace {

std::vector<std::string> names_of(const Term& list) {
  std::vector<std::string> out;
  auto items = list.list_items().value();
  for (const auto& t : items)
    out.push_back(t.is_int() ? std::to_string(t.int_value()) : t.is_atom() ? t.functor().name() : to_string(t));
  return out;
}

}  // namespace

Task tabular_task(const zoo::TabularSchema& schema, const zoo::CsvTable& csv, zoo::Structure st) {
  Task t;
  t.program = parse_program(zoo::generate_tabular_program(schema, st));
  t.instances = zoo::tabular_instances(schema, csv, st);
  t.metric = "class_accuracy";
  t.score = [](const Instance& inst, const ViterbiResult& r) {
    return std::pair{r.decode == *inst.complete ? 1.0 : 0.0, 1.0};
  };
  return t;
}

Task sequence_task(const std::vector<zoo::LabeledSequence>& seqs) { return sequence_task(seqs, seqs); }

Task sequence_task(const std::vector<zoo::LabeledSequence>& seqs, const std::vector<zoo::LabeledSequence>& domain) {
  Task t;
  t.program = parse_program(zoo::generate_hmm_program(zoo::collect_states(domain), zoo::collect_vocab(domain)));
  t.instances = zoo::sequence_instances(seqs);
  t.metric = "token_accuracy";
  t.score = [](const Instance& inst, const ViterbiResult& r) {
    auto gold = names_of(inst.complete->arg(1));
    auto pred = zoo::decode_labels(r);
    double ok = 0;
    for (std::size_t i = 0; i < gold.size() && i < pred.size(); ++i) ok += gold[i] == pred[i];
    return std::pair{ok, double(gold.size())};
  };
  return t;
}

Task tree_task(const zoo::Grammar& grammar, const std::vector<zoo::Tree>& trees, bool leftcorner) {
  Task t;
  auto progs = zoo::generate_cfg_programs(grammar);
  t.program = parse_program(leftcorner ? progs.leftcorner : progs.topdown);
  t.instances = zoo::tree_instances(grammar, trees, leftcorner);
  t.metric = "exact_match";
  const zoo::Grammar* g = &grammar;
  t.score = [g, leftcorner](const Instance& inst, const ViterbiResult& r) {
    zoo::Tree gold = zoo::tree_from_term(inst.complete->arg(1));
    zoo::Tree pred = leftcorner ? zoo::decode_leftcorner(*g, gold.words(), r) : zoo::decode_topdown(*g, r);
    return std::pair{pred == gold ? 1.0 : 0.0, 1.0};
  };
  return t;
}

std::pair<ParameterTable, FitReport> train(const Program& program, const std::vector<Instance>& data,
                                           const TrainConfig& cfg, GraphCache* cache) {
  switch (cfg.method) {
    case Method::Counting: {
      std::vector<std::string> warnings;
      FitReport rep;
      rep.method = "counting";
      rep.converged = true;
      ParameterTable t = count_mle(program, data, cfg.smoothing, &warnings, cache);
      for (const auto& w : warnings) rep.message += (rep.message.empty() ? "" : "; ") + w;
      return {std::move(t), std::move(rep)};
    }
    case Method::Em:
      return em_fit(program, data, ParameterTable(ParamMode::Probability), cfg, cache);
    case Method::Lbfgs:
      return train_crf(program, data, cfg, cache);
  }
  throw std::logic_error("unknown method");
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw DataError("cannot split " + std::to_string(n) + " items into " + std::to_string(k) + " folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> d(0, i);
    std::swap(perm[i], perm[d(rng)]);
  }
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % k;
  return fold;
}

std::pair<double, double> mean_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / double(xs.size() - 1))};
}

namespace {
std::pair<double, double> score_all(const Task& task, const std::vector<Instance>& data, const ParameterTable& params,
                                    GraphCache& cache) {
  double ok = 0, tot = 0;
  for (const auto& inst : data) {
    auto g = cache.get(inst.incomplete);
    auto [c, n] = task.score(inst, viterbi(*g, params));
    ok += c;
    tot += n;
  }
  return {ok, tot};
}
}  // namespace

double evaluate(const Task& task, const std::vector<Instance>& data, const ParameterTable& params, GraphCache* cache) {
  GraphCache local(task.program);
  auto [ok, tot] = score_all(task, data, params, cache ? *cache : local);
  return tot > 0 ? 100.0 * ok / tot : 0.0;
}

CvResult cross_validate(const Task& task, const TrainConfig& cfg, std::size_t k, std::uint64_t seed, GraphCache* cache) {
  GraphCache local(task.program, cfg.solve);
  GraphCache& gc = cache ? *cache : local;
  auto fold = fold_assignment(task.instances.size(), k, seed);
  CvResult res;
  res.method = to_string(cfg.method);
  res.metric = task.metric;
  std::vector<double> accs;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Instance> tr, te;
    for (std::size_t i = 0; i < task.instances.size(); ++i) (fold[i] == f ? te : tr).push_back(task.instances[i]);
    auto t0 = std::chrono::steady_clock::now();
    auto [params, rep] = train(task.program, tr, cfg, &gc);
    FoldResult fr;
    fr.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::tie(fr.correct, fr.total) = score_all(task, te, params, gc);
    fr.accuracy = fr.total > 0 ? 100.0 * fr.correct / fr.total : 0.0;
    res.all_converged = res.all_converged && rep.converged;
    fr.report = std::move(rep);
    accs.push_back(fr.accuracy);
    res.folds.push_back(std::move(fr));
  }
  std::tie(res.mean, res.stddev) = mean_stddev(accs);
  return res;
}

void write_metrics(std::ostream& os, const CvResult& r) {
  char buf[128];
  os << "method: " << r.method << "\nmetric: " << r.metric << "\nfolds: " << r.folds.size() << "\n";
  std::snprintf(buf, sizeof buf, "mean: %.4f\nstddev: %.4f\n", r.mean, r.stddev);
  os << buf << "converged: " << (r.all_converged ? "true" : "false") << "\n\nfold\taccuracy\tcorrect\ttotal\ttrain_seconds\titerations\n";
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    const auto& f = r.folds[i];
    std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%g\t%g\t%.3f\t%zu\n", i + 1, f.accuracy, f.correct, f.total,
                  f.train_seconds, f.report.iterations);
    os << buf;
  }
}

}  // namespace tcrf
