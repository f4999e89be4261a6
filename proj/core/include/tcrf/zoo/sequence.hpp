#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcrf/inference.hpp"
#include "tcrf/learning.hpp"
#include "tcrf/term.hpp"

namespace tcrf::zoo {

struct LabeledSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;  // empty when unlabeled
};

/// The hmm0/hmm1 program over the given state and symbol sets.
std::string generate_hmm_program(const std::vector<std::string>& states, const std::vector<std::string>& vocab);

/// hmm0(Xs,Ys), or hmm0(Xs) when `labels` is empty. Throws DataError on
/// empty input or a length mismatch.
Term encode_sequence(const std::vector<std::string>& tokens, const std::vector<std::string>& labels = {});

/// State sequence read off a Viterbi msw sequence (init, then tr(_) outcomes).
std::vector<std::string> decode_labels(const ViterbiResult& r);

/// Records of a tokens line and an optional labels line, tab separated,
/// separated by blank lines.
std::vector<LabeledSequence> parse_sequences(const std::string& text);
std::vector<LabeledSequence> read_sequences(const std::string& path);
std::string format_sequences(const std::vector<LabeledSequence>& seqs);

/// Distinct states and tokens in first-appearance order.
std::vector<std::string> collect_states(const std::vector<LabeledSequence>& seqs);
std::vector<std::string> collect_vocab(const std::vector<LabeledSequence>& seqs);

/// Training instances; every sequence must be labeled.
std::vector<Instance> sequence_instances(const std::vector<LabeledSequence>& seqs);

/// A concrete HMM, used to synthesize data.
struct Hmm {
  std::vector<std::string> states, vocab;
  std::vector<double> init;
  std::vector<std::vector<double>> trans, emit;

  /// Random parameters; each row drawn from a symmetric Dirichlet(alpha).
  static Hmm random(std::size_t n_states, std::size_t n_symbols, std::mt19937_64& rng, double alpha = 0.5);
  LabeledSequence sample(std::size_t length, std::mt19937_64& rng) const;
};

}  // namespace tcrf::zoo
