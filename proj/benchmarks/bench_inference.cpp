#include <benchmark/benchmark.h>

#include <random>

#include "tcrf/engine.hpp"
#include "tcrf/inference.hpp"
#include "tcrf/lbfgs.hpp"
#include "tcrf/parser.hpp"
#include "tcrf/zoo/sequence.hpp"

using namespace tcrf;

namespace {

struct HmmSetup {
  Program program;
  Term goal;
  ParameterTable params{ParamMode::Weight};
};

HmmSetup hmm_setup(std::size_t length) {
  std::mt19937_64 rng(1);
  auto hmm = zoo::Hmm::random(4, 10, rng);
  HmmSetup s{parse_program(zoo::generate_hmm_program(hmm.states, hmm.vocab)),
             zoo::encode_sequence(hmm.sample(length, rng).tokens)};
  auto g = solve_all(s.program, s.goal);
  std::normal_distribution<double> nd;
  for (const auto& sw : g->switches()) {
    std::vector<double> w(sw.outcomes.size());
    for (double& x : w) x = nd(rng);
    s.params.set(sw.name, sw.outcomes, w);
  }
  return s;
}

void BM_HmmSolve(benchmark::State& st) {
  auto s = hmm_setup(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(solve_all(s.program, s.goal));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_HmmSolve)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_HmmInside(benchmark::State& st) {
  auto s = hmm_setup(st.range(0));
  auto g = solve_all(s.program, s.goal);
  for (auto _ : st) benchmark::DoNotOptimize(log_inside_root(*g, s.params));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_HmmInside)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_HmmViterbi(benchmark::State& st) {
  auto s = hmm_setup(st.range(0));
  auto g = solve_all(s.program, s.goal);
  for (auto _ : st) benchmark::DoNotOptimize(viterbi(*g, s.params));
}
BENCHMARK(BM_HmmViterbi)->RangeMultiplier(2)->Range(8, 128);

void BM_HmmExpectedCounts(benchmark::State& st) {
  auto s = hmm_setup(st.range(0));
  auto g = solve_all(s.program, s.goal);
  for (auto _ : st) benchmark::DoNotOptimize(expected_counts(*g, s.params));
}
BENCHMARK(BM_HmmExpectedCounts)->RangeMultiplier(2)->Range(8, 128);

void BM_LbfgsRosenbrock(benchmark::State& st) {
  const std::size_t n = st.range(0);
  auto f = [n](const std::vector<double>& x, std::vector<double>& g) {
    double v = 0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double a = 1 - x[i], b = x[i + 1] - x[i] * x[i];
      v += a * a + 100 * b * b;
      g[i] += -2 * a - 400 * x[i] * b;
      g[i + 1] += 200 * b;
    }
    return v;
  };
  LbfgsOptions o;
  o.max_iters = 10000;
  for (auto _ : st) benchmark::DoNotOptimize(lbfgs_minimize(f, std::vector<double>(n, -1.0), o));
}
BENCHMARK(BM_LbfgsRosenbrock)->Arg(2)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
