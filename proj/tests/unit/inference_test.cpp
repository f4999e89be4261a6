#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/inference.hpp"
#include "test_util.hpp"

using namespace tcrf;
using namespace testutil;

TEST(Inside, UniformWeights) {
  Program hmm = fixture("hmm_fig2.pl");
  Program nb = fixture("nb_fig1.pl");
  ParameterTable zero(ParamMode::Weight);
  EXPECT_NEAR(log_inside_root(solve(hmm, "hmm0([a,b,a])"), zero), 3 * std::log(2.0), 1e-12);
  EXPECT_NEAR(log_inside_root(solve(nb, "nb([high,low])"), zero), std::log(4.0), 1e-12);
}

TEST(Inside, CompleteGoalIsProductOfItsExplanation) {
  Program nb = fixture("nb_fig1.pl");
  std::mt19937_64 rng(7);
  auto g = solve(nb, "nb([mild,low],fall)");
  auto t = random_table(g, ParamMode::Probability, rng);
  auto e = enumerate_explanations(g, 10);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(log_inside_root(g, t), explanation_score(e[0], t, g), 1e-12);
}

TEST(Inside, MatchesEnumerationOnRandomTables) {
  Program hmm = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(11);
  for (const char* goal : {"hmm0([a])", "hmm0([a,b,b])", "hmm0([b,a,a,b,a,b])"}) {
    auto g = solve(hmm, goal);
    auto ex = enumerate_explanations(g, 10000);
    for (int rep = 0; rep < 10; ++rep) {
      for (auto mode : {ParamMode::Weight, ParamMode::Probability}) {
        auto t = random_table(g, mode, rng);
        std::vector<double> scores;
        for (const auto& e : ex) scores.push_back(explanation_score(e, t, g));
        EXPECT_TRUE(rel_close(log_inside_root(g, t), log_sum_exp(scores), 1e-9)) << goal;
      }
    }
  }
}

TEST(Conditional, UniformNaiveBayes) {
  Program nb = fixture("nb_fig1.pl");
  ParameterTable zero(ParamMode::Weight);
  double lp = conditional_log_prob(solve(nb, "nb([high,low],winter)"), solve(nb, "nb([high,low])"), zero);
  EXPECT_NEAR(lp, -std::log(4.0), 1e-12);
}

TEST(Conditional, HmmLengthOneHandComputation) {
  Program hmm = fixture("hmm_fig2.pl");
  ParameterTable t(ParamMode::Weight);
  t.set(T("init"), {T("s0"), T("s1")}, {1.0, 0.0});
  double lp = conditional_log_prob(solve(hmm, "hmm0([a],[s0])"), solve(hmm, "hmm0([a])"), t);
  EXPECT_NEAR(lp, 1.0 - std::log(std::exp(1.0) + 1.0), 1e-12);
}

TEST(Conditional, ContainmentViolationIsAnError) {
  Program nb = fixture("nb_fig1.pl");
  ParameterTable zero(ParamMode::Weight);
  EXPECT_THROW(conditional_log_prob(solve(nb, "nb([high,low],winter)"), solve(nb, "nb([low,low])"), zero),
               DataError);
  EXPECT_THROW(conditional_log_prob(solve(nb, "nb([high,low])"), solve(nb, "nb([high,low])"), zero), DataError);
}

TEST(Conditional, WeightModeWithLogThetaEqualsGenerativeConditional) {
  Program hmm = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(3);
  auto gi = solve(hmm, "hmm0([a,b,b,a])");
  auto gc = solve(hmm, "hmm0([a,b,b,a],[s0,s1,s1,s0])");
  for (int rep = 0; rep < 10; ++rep) {
    auto theta = random_table(gi, ParamMode::Probability, rng);
    auto lam = ParameterTable::weights_from_probabilities(theta);
    // Generative side by enumeration.
    auto ex = enumerate_explanations(gi, 1000);
    std::vector<double> s;
    for (const auto& e : ex) s.push_back(explanation_score(e, theta, gi));
    double want = explanation_score(enumerate_explanations(gc, 1)[0], theta, gc) - log_sum_exp(s);
    EXPECT_NEAR(conditional_log_prob(gc, gi, lam), want, 1e-9);
    EXPECT_NEAR(conditional_log_prob(gc, gi, theta), want, 1e-9);
  }
}

TEST(Viterbi, DecodesClassAndScore) {
  Program nb = fixture("nb_fig1.pl");
  ParameterTable t(ParamMode::Weight);
  t.set(T("season"), {T("spring"), T("summer"), T("fall"), T("winter")}, {1, 0, 0, 0});
  auto r = viterbi(solve(nb, "nb([high,low])"), t);
  EXPECT_EQ(r.decode, T("nb([high,low],spring)"));
  EXPECT_DOUBLE_EQ(r.score, 1.0);
}

TEST(Viterbi, TieGoesToFirstOutcome) {
  Program nb = fixture("nb_fig1.pl");
  auto r = viterbi(solve(nb, "nb([high,low])"), ParameterTable(ParamMode::Weight));
  EXPECT_EQ(r.decode, T("nb([high,low],spring)"));
  EXPECT_DOUBLE_EQ(r.score, 0.0);
  auto h = viterbi(solve(fixture("hmm_fig2.pl"), "hmm0([a,b],Y)"), ParameterTable(ParamMode::Weight));
  EXPECT_EQ(h.decode, T("hmm0([a,b],[s0,s0])"));
}

TEST(Viterbi, MatchesBruteForceArgmax) {
  Program hmm = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(5);
  for (int len = 1; len <= 6; ++len) {
    std::string goal = "hmm0([";
    for (int i = 0; i < len; ++i) goal += (i ? ",": "") + std::string(i % 3 ? "a" : "b");
    goal += "])";
    auto g = solve(hmm, goal);
    auto ex = enumerate_explanations(g, 10000);
    for (int rep = 0; rep < 5; ++rep) {
      auto t = random_table(g, ParamMode::Weight, rng);
      double best = -INFINITY;
      CountVector arg;
      for (const auto& e : ex) {
        double s = explanation_score(e, t, g);
        if (s > best) best = s, arg = e;
      }
      auto r = viterbi(g, t);
      EXPECT_NEAR(r.score, best, 1e-9);
      EXPECT_EQ(r.explanation, arg);
    }
  }
}

TEST(ExpectedCounts, UniformNaiveBayes) {
  Program nb = fixture("nb_fig1.pl");
  auto c = expected_counts(solve(nb, "nb([high,low])"), ParameterTable(ParamMode::Weight));
  for (const char* s : {"spring", "summer", "fall", "winter"}) EXPECT_NEAR(c.get(T("season"), T(s)), 0.25, 1e-12);
}

TEST(ExpectedCounts, CompleteGoalGivesIntegerCounts) {
  Program hmm = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(9);
  auto g = solve(hmm, "hmm0([a,a,b],[s0,s0,s1])");
  auto c = expected_counts(g, random_table(g, ParamMode::Weight, rng));
  auto e = enumerate_explanations(g, 1)[0];
  ASSERT_EQ(c.size(), e.size());
  for (const auto& [k, v] : e) EXPECT_NEAR(c.get(k.first, k.second), v, 1e-12);
  EXPECT_DOUBLE_EQ(c.get(T("tr(s0)"), T("s0")), 1.0);
}

TEST(ExpectedCounts, MatchesEnumeration) {
  Program hmm = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(13);
  auto g = solve(hmm, "hmm0([a,b,a,a,b])");
  auto ex = enumerate_explanations(g, 10000);
  for (int rep = 0; rep < 5; ++rep) {
    auto t = random_table(g, ParamMode::Weight, rng);
    std::vector<double> s;
    for (const auto& e : ex) s.push_back(explanation_score(e, t, g));
    double z = log_sum_exp(s);
    CountVector want;
    for (std::size_t i = 0; i < ex.size(); ++i)
      for (const auto& [k, v] : ex[i]) want.add(k.first, k.second, v * std::exp(s[i] - z));
    auto got = expected_counts(g, t);
    for (const auto& [k, v] : want) EXPECT_TRUE(rel_close(got.get(k.first, k.second), v, 1e-9));
    for (const auto& [k, v] : got) EXPECT_GE(v, 0.0);
  }
}

TEST(Inference, ProbabilityModeNormalizes) {
  Program nb = fixture("nb_fig1.pl");
  std::mt19937_64 rng(1);
  ParameterTable theta(ParamMode::Probability);
  auto any = solve(nb, "nb([high,low])");
  theta = random_table(any, ParamMode::Probability, rng);
  double total = 0;
  for (const char* t : {"high", "mild", "low"})
    for (const char* h : {"high", "low"})
      total += std::exp(log_inside_root(solve(nb, std::string("nb([") + t + "," + h + "])"), theta));
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Inference, CostLinearInLength) {
  Program hmm = fixture("hmm_fig2.pl");
  std::vector<std::size_t> ops;
  for (int n : {10, 20, 40, 80}) {
    std::string goal = "hmm0([";
    for (int i = 0; i < n; ++i) goal += (i ? ",a" : "a");
    goal += "])";
    auto g = solve(hmm, goal);
    DpCounter c;
    SwitchWeights w = log_weights(g, ParameterTable(ParamMode::Weight));
    expected_switch_counts(g, w, &c);
    viterbi(g, w, &c);
    ops.push_back(c.ops);
  }
  // Doubling the length should roughly double the work.
  for (std::size_t i = 1; i < ops.size(); ++i) {
    double r = double(ops[i]) / double(ops[i - 1]);
    EXPECT_GT(r, 1.8);
    EXPECT_LT(r, 2.2);
  }
}

TEST(Params, RoundTripIsBitExact) {
  std::mt19937_64 rng(2);
  auto g = solve(fixture("hmm_fig2.pl"), "hmm0([a,b])");
  for (auto mode : {ParamMode::Weight, ParamMode::Probability}) {
    auto t = random_table(g, mode, rng);
    t.set(T("attr(doors,[vhigh,unacc])"), {T("'5more'"), T("2")}, {0.1, 0.9});
    std::stringstream ss;
    t.save(ss);
    auto u = ParameterTable::load(ss);
    EXPECT_EQ(u.mode(), mode);
    ASSERT_EQ(u.size(), t.size());
    for (const auto& [sw, e] : t.entries()) {
      const auto* f = u.find(sw);
      ASSERT_NE(f, nullptr);
      EXPECT_EQ(f->outcomes, e.outcomes);
      for (std::size_t i = 0; i < e.values.size(); ++i) EXPECT_EQ(f->values[i], e.values[i]);
    }
  }
}
