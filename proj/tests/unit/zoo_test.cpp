#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/inference.hpp"
#include "tcrf/parser.hpp"
#include "tcrf/zoo/grammar.hpp"
#include "tcrf/zoo/sequence.hpp"
#include "tcrf/zoo/tabular.hpp"
#include "test_util.hpp"

using namespace tcrf;
using namespace tcrf::zoo;
using namespace testutil;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string squeeze(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

std::string fixture_path(const std::string& name) { return std::string(TCRF_FIXTURES) + "/" + name; }

// Independent enumeration of every parse tree of `ws[i..j)` rooted at `a`.
std::vector<Tree> all_trees(const Grammar& g, const std::vector<std::string>& ws, std::size_t i, std::size_t j,
                            const std::string& a) {
  std::vector<Tree> out;
  std::function<void(const Rule&, std::size_t, std::size_t, std::vector<Tree>&)> fill =
      [&](const Rule& r, std::size_t k, std::size_t from, std::vector<Tree>& kids) {
        if (k == r.rhs.size()) {
          if (from == j) out.push_back(Tree{a, kids});
          return;
        }
        std::size_t left = r.rhs.size() - k - 1;  // each later symbol needs a word
        for (std::size_t to = from + 1; to + left <= j; ++to) {
          const auto& s = r.rhs[k];
          std::vector<Tree> subs;
          if (g.is_terminal(s)) {
            if (to == from + 1 && ws[from] == s) subs.push_back(Tree{s, {}});
          } else {
            subs = all_trees(g, ws, from, to, s);
          }
          for (auto& t : subs) {
            kids.push_back(t);
            fill(r, k + 1, to, kids);
            kids.pop_back();
          }
        }
      };
  for (const Rule* r : g.rules_for(a)) {
    std::vector<Tree> kids;
    fill(*r, 0, i, kids);
  }
  return out;
}

std::vector<std::vector<std::string>> all_strings(const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::vector<std::vector<std::string>> out, frontier{{}};
  for (std::size_t n = 1; n <= max_len; ++n) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : frontier)
      for (const auto& a : alphabet) {
        auto t = s;
        t.push_back(a);
        next.push_back(t);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST(Tabular, NaiveBayesMatchesFigureOne) {
  auto s = load_schema(fixture_path("nb_fig1.schema"));
  std::string text = generate_tabular_program(s, Structure::NaiveBayes);
  EXPECT_EQ(squeeze(text), squeeze(slurp(fixture_path("nb_fig1.pl"))));
  Program p = parse_program(text);
  EXPECT_EQ(p.clauses().size(), 2u);
}

TEST(Tabular, BncMatchesFigureFour) {
  auto s = load_schema(fixture_path("car_bnc.schema"));
  EXPECT_EQ(squeeze(generate_tabular_program(s, Structure::Bnc)), squeeze(slurp(fixture_path("car_fig4.pl"))));
}

TEST(Tabular, Encode) {
  auto s = load_schema(fixture_path("nb_fig1.schema"));
  EXPECT_EQ(encode_tabular(s, {"high", "low"}, "spring", Structure::NaiveBayes), T("nb([high,low],spring)"));
  EXPECT_EQ(encode_tabular(s, {"high", "low"}, std::nullopt, Structure::NaiveBayes), T("nb([high,low])"));
  EXPECT_THROW(encode_tabular(s, {"hot", "low"}, "spring", Structure::NaiveBayes), DataError);
  EXPECT_THROW(encode_tabular(s, {"high"}, "spring", Structure::NaiveBayes), DataError);
  EXPECT_THROW(encode_tabular(s, {"high", "low"}, "monsoon", Structure::NaiveBayes), DataError);
}

TEST(Tabular, NoAttributes) {
  auto s = parse_schema("class: yes,no\n");
  Program p = parse_program(generate_tabular_program(s, Structure::NaiveBayes));
  auto g = solve(p, "nb([],yes)");
  auto e = enumerate_explanations(g, 10);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].total(), 1.0);
  EXPECT_EQ(count_explanations(solve(p, "nb([])")), 2u);
}

TEST(Tabular, SchemaErrors) {
  EXPECT_THROW(parse_schema("c: a,b\nx: 1,2\ny: 1,2\nparents(x) = y\nparents(y) = x\n"), DataError);
  EXPECT_THROW(parse_schema("c: a,b\nx: 1,2\nparents(x) = z\n"), DataError);
  EXPECT_THROW(parse_schema("c: a,b\nx: 1,1\n"), DataError);
  EXPECT_THROW(parse_schema("# nothing\n"), DataError);
}

TEST(Tabular, LaterParentIsEmittedFirst) {
  auto s = parse_schema("c: a,b\nx: 1,2\ny: 1,2\nparents(x) = y\n");
  Program p = parse_program(generate_tabular_program(s, Structure::Bnc));
  EXPECT_EQ(count_explanations(solve(p, "bn([1,2])")), 2u);
  EXPECT_EQ(count_explanations(solve(p, "bn([1,2],a)")), 1u);
}

TEST(Tabular, CarInstancesHaveUniqueExplanations) {
  auto s = load_schema(std::string(TCRF_DATA) + "/car_bnc.schema");
  auto data = tabular_instances(s, read_csv(std::string(TCRF_DATA) + "/car.csv"), Structure::Bnc);
  ASSERT_EQ(data.size(), 1728u);
  Program p = parse_program(generate_tabular_program(s, Structure::Bnc));
  for (std::size_t i = 0; i < data.size(); i += 97) {
    auto g = solve_all(p, *data[i].complete);
    ASSERT_TRUE(g);
    EXPECT_EQ(count_explanations(*g), 1u);
    EXPECT_EQ(count_explanations(*solve_all(p, data[i].incomplete)), 4u);
  }
}

TEST(Tabular, CsvRowErrorsNameTheRow) {
  auto s = load_schema(fixture_path("nb_fig1.schema"));
  auto t = parse_csv("temp,humidity,season\nhigh,low,spring\nhot,low,spring\n");
  try {
    tabular_instances(s, t, Structure::NaiveBayes);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
  }
}

TEST(Sequence, HmmMatchesFigureTwo) {
  EXPECT_EQ(squeeze(generate_hmm_program({"s0", "s1"}, {"a", "b"})), squeeze(slurp(fixture_path("hmm_fig2.pl"))));
  EXPECT_THROW(generate_hmm_program({}, {"a"}), DataError);
}

TEST(Sequence, Encode) {
  EXPECT_EQ(encode_sequence({"a", "b"}, {"s0", "s1"}), T("hmm0([a,b],[s0,s1])"));
  EXPECT_EQ(encode_sequence({"a"}), T("hmm0([a])"));
  EXPECT_THROW(encode_sequence({"a", "b"}, {"s0"}), DataError);
  EXPECT_THROW(encode_sequence({}), DataError);
}

TEST(Sequence, DegenerateChain) {
  Program p = parse_program(generate_hmm_program({"q"}, {"x"}));
  EXPECT_EQ(count_explanations(solve(p, "hmm0([x,x,x,x])")), 1u);
}

TEST(Sequence, LargeDeclarationsLoad) {
  std::vector<std::string> states, vocab;
  for (int i = 0; i < 45; ++i) states.push_back("t" + std::to_string(i));
  for (int i = 0; i < 8476; ++i) vocab.push_back("w" + std::to_string(i));
  Program p = parse_program(generate_hmm_program(states, vocab));
  ASSERT_EQ(p.switch_decls().size(), 3u);
  EXPECT_EQ(p.switch_decls()[0].outcomes.size(), 45u);
  EXPECT_EQ(p.switch_decls()[1].outcomes.size(), 45u);
  EXPECT_EQ(p.switch_decls()[2].outcomes.size(), 8476u);
}

TEST(Sequence, FileRoundTripAndDecode) {
  auto seqs = parse_sequences("a\tb\tb\ns0\ts1\ts1\n\nb\ta\ns1\ts0\n");
  ASSERT_EQ(seqs.size(), 2u);
  EXPECT_EQ(parse_sequences(format_sequences(seqs))[1].labels, seqs[1].labels);
  EXPECT_EQ(collect_states(seqs), (std::vector<std::string>{"s0", "s1"}));

  Program p = fixture("hmm_fig2.pl");
  std::mt19937_64 rng(3);
  auto g = solve(p, "hmm0([a,b,b,a])");
  auto t = random_table(g, ParamMode::Weight, rng);
  auto r = viterbi(g, t);
  auto labels = decode_labels(r);
  ASSERT_EQ(labels.size(), 4u);
  // The decoded labels' complete goal scores exactly the Viterbi score.
  auto c = solve_all(p, encode_sequence({"a", "b", "b", "a"}, labels));
  ASSERT_TRUE(c);
  EXPECT_NEAR(log_inside_root(*c, t), r.score, 1e-12);
}

TEST(Grammar, Validation) {
  EXPECT_THROW(parse_grammar("s -> \n"), DataError);
  EXPECT_THROW(parse_grammar("start: x\ns -> a\n"), DataError);
  EXPECT_THROW(parse_grammar("s -> t\nt -> s\ns -> a\n"), DataError);
  EXPECT_THROW(parse_grammar("s -> s b\n"), DataError);
  EXPECT_THROW(parse_grammar("s -> a\ns -> a\n"), DataError);
  auto g = load_grammar(fixture_path("toy2.grammar"));
  EXPECT_EQ(g.terminals(), std::vector<std::string>{"a"});
  EXPECT_TRUE(g.left_recursive("s"));
}

TEST(Grammar, TreeSyntax) {
  Tree t = parse_tree("(s (s a) a)");
  EXPECT_EQ(to_string(t), "(s (s a) a)");
  EXPECT_EQ(t.words(), (std::vector<std::string>{"a", "a"}));
  EXPECT_EQ(tree_from_term(tree_term(t)), t);
  EXPECT_THROW(parse_tree("(s a"), DataError);
  EXPECT_THROW(parse_tree("a"), DataError);
}

TEST(Grammar, TwoRuleTopDown) {
  auto g = load_grammar(fixture_path("toy2.grammar"));
  Program td = parse_program(generate_cfg_programs(g).topdown);
  auto goals = encode_tree(g, parse_tree("(s (s a) a)"));
  EXPECT_EQ(goals.topdown, T("parse([a,a],tree(s,[tree(s,[a]),a]))"));
  EXPECT_EQ(count_explanations(solve_all(td, goals.topdown).value()), 1u);
  auto sg = solve_all(td, goals.sentence).value();
  EXPECT_EQ(count_explanations(sg), 1u);
  auto r = viterbi(sg, ParameterTable(ParamMode::Weight));
  EXPECT_EQ(to_string(decode_topdown(g, r)), "(s (s a) a)");
}

TEST(Grammar, SingleTerminalTree) {
  auto g = load_grammar(fixture_path("toy2.grammar"));
  auto progs = generate_cfg_programs(g);
  auto goals = encode_tree(g, parse_tree("(s a)"));
  for (const auto& [text, goal] : {std::pair{progs.topdown, goals.topdown}, std::pair{progs.leftcorner, goals.leftcorner}}) {
    Program p = parse_program(text);
    auto e = enumerate_explanations(solve_all(p, goal).value(), 10);
    ASSERT_EQ(e.size(), 1u);
    EXPECT_EQ(e[0].total(), text == progs.topdown ? 1.0 : 3.0);  // lc: first, lc, attach
  }
  EXPECT_THROW(encode_tree(g, parse_tree("(s a a)")), DataError);
  EXPECT_THROW(encode_tree(g, parse_tree("(s (s a) b)")), DataError);
}

TEST(Grammar, LeftCornerSwitchFamilies) {
  auto g = load_grammar(fixture_path("pp.grammar"));
  std::string lc = generate_cfg_programs(g).leftcorner;
  Program p = parse_program(lc);
  EXPECT_TRUE(p.warnings().empty()) << p.warnings().front();
  std::set<std::string> families;
  for (const auto& d : p.switch_decls()) families.insert(d.pattern.functor().name());
  EXPECT_EQ(families, (std::set<std::string>{"first", "lc", "attach"}));
  EXPECT_NE(lc.find("( reachable(A,A) -> msw(attach(A),Op) ; Op = attach )"), std::string::npos);
  // attach/1 is declared exactly for the left-recursive nonterminals
  std::set<std::string> attach;
  for (const auto& d : p.switch_decls())
    if (d.pattern.functor().name() == "attach") attach.insert(d.pattern.arg(0).functor().name());
  EXPECT_EQ(attach, (std::set<std::string>{"s", "np", "vp"}));
}

TEST(Grammar, ParsersAgreeOnExhaustiveStrings) {
  for (const char* file : {"toy2.grammar", "pp.grammar"}) {
    auto g = load_grammar(fixture_path(file));
    auto progs = generate_cfg_programs(g);
    Program td = parse_program(progs.topdown), lc = parse_program(progs.leftcorner);
    for (const auto& ws : all_strings(g.terminals(), 6)) {
      auto a = solve_all(td, sentence_goal(ws));
      auto b = solve_all(lc, sentence_goal(ws, true));
      std::size_t n = all_trees(g, ws, 0, ws.size(), g.start()).size();
      ASSERT_EQ(a.has_value(), n > 0);
      ASSERT_EQ(b.has_value(), n > 0);
      if (n) {
        EXPECT_EQ(count_explanations(*a), n);
        EXPECT_EQ(count_explanations(*b), n);
      }
    }
  }
}

TEST(Grammar, SoundnessAndViterbiDecodeOnSampledTrees) {
  auto g = load_grammar(fixture_path("pp.grammar"));
  auto progs = generate_cfg_programs(g);
  Program td = parse_program(progs.topdown), lc = parse_program(progs.leftcorner);
  std::mt19937_64 rng(5);
  auto pcfg = Pcfg::random(g, rng);
  for (int rep = 0; rep < 25; ++rep) {
    Tree t = pcfg.sample(rng, 7);
    auto goals = encode_tree(g, t);
    auto ws = t.words();
    for (bool left : {false, true}) {
      const Program& p = left ? lc : td;
      auto cg = solve_all(p, left ? goals.leftcorner : goals.topdown).value();
      auto e = unique_explanation(cg);
      auto sg = solve_all(p, left ? goals.sentence_lc : goals.sentence).value();
      EXPECT_EQ(contains_explanation(sg, e), std::optional<bool>(true));

      // Brute-force argmax over every tree of the sentence.
      auto w = random_table(sg, ParamMode::Weight, rng);
      double best = -INFINITY;
      Tree arg;
      for (const auto& cand : all_trees(g, ws, 0, ws.size(), g.start())) {
        auto cgoals = encode_tree(g, cand);
        auto c = solve_all(p, left ? cgoals.leftcorner : cgoals.topdown).value();
        double s = log_inside_root(c, w);
        if (s > best) best = s, arg = cand;
      }
      auto r = viterbi(sg, w);
      EXPECT_NEAR(r.score, best, 1e-9);
      Tree dec = left ? decode_leftcorner(g, ws, r) : decode_topdown(g, r);
      EXPECT_EQ(to_string(dec), to_string(arg));
    }
  }
}
