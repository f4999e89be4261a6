#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcrf/counts.hpp"
#include "tcrf/engine.hpp"
#include "tcrf/program.hpp"
#include "tcrf/term.hpp"

namespace tcrf {

struct TransformStep {
  enum class Kind { Define, Unfold, Fold };
  Kind kind = Kind::Define;
  Clause clause;             // Define
  std::size_t target = 0;    // Unfold / Fold: clause id
  std::size_t pos = 0;       // Unfold: 1-based body position
  std::size_t from = 0, to = 0;  // Fold: 1-based inclusive body range
  std::size_t by = 0;        // Fold: defining clause id
};

/// One step per line: `define <clause>.`, `unfold <id> at <pos>.`,
/// `fold <id> at <pos>..<pos> by <id>.`; `%` starts a comment.
std::vector<TransformStep> parse_script(const std::string& text);
std::vector<TransformStep> load_script(const std::string& path);

struct NumberedClause {
  std::size_t id = 0;
  Clause clause;
};

struct TransformResult {
  Program program;
  std::vector<NumberedClause> clauses;  // final program, in order, with ids
  std::vector<std::string> log;
};

/// Replays the script. Loaded clauses are numbered 1..n in source order;
/// every clause a step produces takes the next number.
///
/// Folding follows the original unfold/fold conditions: the defining clause
/// is the only definition of its predicate; its body variables that are not
/// in its head map to distinct variables that occur nowhere else in the
/// target clause; and a target descended from a definition must have been
/// unfolded at least once. Throws TransformError when a step does not apply.
TransformResult apply_script(const Program& program, const std::vector<TransformStep>& script);

struct ProbeResult {
  enum class Status { Equal, Unequal, Skipped };
  Term goal1, goal2;
  Status status = Status::Equal;
  std::size_t count1 = 0, count2 = 0;
  std::optional<CountVector> counterexample;  // in one multiset more often than in the other
  std::string detail;
};

struct EquivalenceReport {
  std::vector<ProbeResult> probes;
  bool all_equal() const;
  std::size_t skipped() const;
};

/// Probe values are given per variable name of the goal patterns.
using Probe = std::map<std::string, Term>;

/// Compares explanation multisets of the instantiated goals under both
/// programs. This is bounded testing: a probe whose expansion exceeds
/// `limit` explanations is skipped and flagged.
EquivalenceReport check_explanation_equivalence(const Program& p1, const std::string& pattern1, const Program& p2,
                                                const std::string& pattern2, const std::vector<Probe>& probes,
                                                std::size_t limit = 100000, const SolveOptions& opts = {});

std::string to_string(const EquivalenceReport& r);

}  // namespace tcrf
