#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tcrf/inference.hpp"
#include "tcrf/learning.hpp"
#include "tcrf/params.hpp"
#include "tcrf/program.hpp"
#include "tcrf/report.hpp"
#include "tcrf/zoo/grammar.hpp"
#include "tcrf/zoo/sequence.hpp"
#include "tcrf/zoo/tabular.hpp"

namespace tcrf {

/// (correct, total) for one held-out instance given its Viterbi result.
using Scorer = std::function<std::pair<double, double>(const Instance&, const ViterbiResult&)>;

/// A dataset bound to the program that models it and a task metric.
struct Task {
  Program program;
  std::vector<Instance> instances;
  Scorer score;
  std::string metric;  // class_accuracy, token_accuracy or exact_match
};

Task tabular_task(const zoo::TabularSchema& schema, const zoo::CsvTable& csv, zoo::Structure st);
Task sequence_task(const std::vector<zoo::LabeledSequence>& seqs);
/// Uses the vocabulary and state set of `domain` (defaults to `seqs`).
Task sequence_task(const std::vector<zoo::LabeledSequence>& seqs, const std::vector<zoo::LabeledSequence>& domain);
/// `grammar` must outlive the task.
Task tree_task(const zoo::Grammar& grammar, const std::vector<zoo::Tree>& trees, bool leftcorner = false);

/// Fits parameters with the configured method. Counting and EM produce a
/// probability table; L-BFGS a weight table.
std::pair<ParameterTable, FitReport> train(const Program& program, const std::vector<Instance>& data,
                                           const TrainConfig& cfg, GraphCache* cache = nullptr);

/// Fold index of each of `n` items: a seeded Fisher-Yates shuffle dealt
/// round-robin into `k` folds.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

struct FoldResult {
  double correct = 0, total = 0;
  double accuracy = 0;
  double train_seconds = 0;
  FitReport report;
};

struct CvResult {
  std::string method, metric;
  std::vector<FoldResult> folds;
  double mean = 0, stddev = 0;  // over fold accuracies, in percent; sample stddev
  bool all_converged = true;
};

/// Train on K−1 folds, Viterbi-decode the held-out fold, score.
CvResult cross_validate(const Task& task, const TrainConfig& cfg, std::size_t k, std::uint64_t seed,
                        GraphCache* cache = nullptr);

/// Accuracy (in percent) of `params` on `data`.
double evaluate(const Task& task, const std::vector<Instance>& data, const ParameterTable& params,
                GraphCache* cache = nullptr);

std::pair<double, double> mean_stddev(const std::vector<double>& xs);

void write_metrics(std::ostream& os, const CvResult& r);

}  // namespace tcrf
