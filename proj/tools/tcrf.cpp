// tcrf: train, evaluate and apply generative/discriminative models written as
// probabilistic logic programs.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/eval.hpp"
#include "tcrf/parser.hpp"
#include "tcrf/transform.hpp"

using namespace tcrf;

namespace {

struct DataOptions {
  std::string program, schema, structure = "nb", grammar, parser = "topdown", data;
  std::size_t max_steps = 1'000'000;
};

struct FitOptions {
  std::string method = "lbfgs";
  double mu = 1.0, smoothing = 1.0, grad_tol = 1e-5, em_tol = 1e-8;
  std::size_t max_iters = 1000, memory = 10, threads = 1;
};

void add_data_options(CLI::App* app, DataOptions& d, bool data_required = true) {
  app->add_option("--program", d.program, "Program file (default: generated from the schema/grammar/data)");
  app->add_option("--schema", d.schema, "Tabular schema file; data is CSV");
  app->add_option("--structure", d.structure, "Tabular structure: nb or bnc")->check(CLI::IsMember({"nb", "bnc"}));
  app->add_option("--grammar", d.grammar, "Grammar file; data is one bracketed tree per line");
  app->add_option("--parser", d.parser, "Parser: topdown or leftcorner")->check(CLI::IsMember({"topdown", "leftcorner"}));
  auto* opt = app->add_option("--data", d.data, "Data file (CSV, sequences, or trees)");
  if (data_required) opt->required();
  app->add_option("--max-steps", d.max_steps, "Resolution-step limit per explanation search");
}

void add_fit_options(CLI::App* app, FitOptions& f) {
  app->add_option("--method", f.method, "counting, em or lbfgs")->check(CLI::IsMember({"counting", "em", "lbfgs"}));
  app->add_option("--mu", f.mu, "L2 regularization strength for lbfgs");
  app->add_option("--smoothing", f.smoothing, "Pseudo-count for counting and em");
  app->add_option("--max-iters", f.max_iters, "Iteration limit for em and lbfgs");
  app->add_option("--grad-tol", f.grad_tol, "Gradient infinity-norm tolerance for lbfgs");
  app->add_option("--em-tol", f.em_tol, "Objective improvement tolerance for em");
  app->add_option("--memory", f.memory, "L-BFGS memory");
  app->add_option("--threads", f.threads, "Worker threads for the CLL gradient")->check(CLI::PositiveNumber);
}

TrainConfig make_config(const FitOptions& f, const DataOptions& d) {
  TrainConfig c;
  c.method = parse_method(f.method);
  c.mu = f.mu;
  c.smoothing = f.smoothing;
  c.max_iters = f.max_iters;
  c.grad_tol = f.grad_tol;
  c.em_tol = f.em_tol;
  c.lbfgs_memory = f.memory;
  c.threads = f.threads;
  c.solve.max_steps = d.max_steps;
  return c;
}

// Owns whatever the task's scorer refers to.
struct LoadedTask {
  std::unique_ptr<zoo::Grammar> grammar;
  zoo::TabularSchema schema;
  Task task;
};

LoadedTask load_task(const DataOptions& d) {
  LoadedTask lt;
  if (!d.schema.empty() && !d.grammar.empty()) throw Error("--schema and --grammar are mutually exclusive");
  if (!d.schema.empty()) {
    lt.schema = zoo::load_schema(d.schema);
    lt.task = tabular_task(lt.schema, zoo::read_csv(d.data), zoo::parse_structure(d.structure));
  } else if (!d.grammar.empty()) {
    lt.grammar = std::make_unique<zoo::Grammar>(zoo::load_grammar(d.grammar));
    lt.task = tree_task(*lt.grammar, zoo::read_trees(d.data), d.parser == "leftcorner");
  } else {
    lt.task = sequence_task(zoo::read_sequences(d.data));
  }
  if (!d.program.empty()) lt.task.program = load_program(d.program);
  for (const auto& w : lt.task.program.warnings()) std::cerr << "warning: " << w << "\n";
  return lt;
}

int cmd_train(const DataOptions& d, const FitOptions& f, const std::string& params_out, const std::string& report_out) {
  auto lt = load_task(d);
  auto cfg = make_config(f, d);
  GraphCache cache(lt.task.program, cfg.solve);
  auto [params, rep] = train(lt.task.program, lt.task.instances, cfg, &cache);
  params.save(params_out);
  if (!report_out.empty()) write_fit_report(report_out, rep);
  std::fprintf(stderr, "%s: %zu instances, objective %.10g after %zu iterations (%s)\n", rep.method.c_str(),
               lt.task.instances.size(), rep.final_objective, rep.iterations, rep.converged ? "converged" : "not converged");
  if (!rep.message.empty()) std::cerr << rep.message << "\n";
  return rep.converged ? 0 : 2;
}

int cmd_eval(const DataOptions& d, const FitOptions& f, std::size_t folds, std::uint64_t seed, const std::string& out) {
  auto lt = load_task(d);
  auto cfg = make_config(f, d);
  auto res = cross_validate(lt.task, cfg, folds, seed);
  std::printf("%s %s: %.2f%% (%.2f) over %zu folds\n", res.method.c_str(), res.metric.c_str(), res.mean, res.stddev,
              res.folds.size());
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw Error("cannot write " + out);
    write_metrics(os, res);
  }
  return 0;
}

std::string format_score(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", s);
  return buf;
}

int cmd_predict(const DataOptions& d, const std::string& params_in, const std::string& out_path) {
  ParameterTable params = ParameterTable::load(params_in);
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw Error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  SolveOptions so;
  so.max_steps = d.max_steps;

  auto decode = [&](const Program& p, const Term& goal) {
    auto g = solve_all(p, goal, so);
    if (!g) throw DataError("no parse/explanation for " + to_string(goal));
    return viterbi(*g, params);
  };

  if (!d.schema.empty()) {
    auto schema = zoo::load_schema(d.schema);
    auto st = zoo::parse_structure(d.structure);
    Program p = d.program.empty() ? parse_program(zoo::generate_tabular_program(schema, st)) : load_program(d.program);
    auto csv = zoo::read_csv(d.data);
    std::vector<std::size_t> cols;
    for (const auto& a : schema.attributes) {
      auto it = std::find(csv.header.begin(), csv.header.end(), a.name);
      if (it == csv.header.end()) throw DataError("CSV has no column " + a.name);
      cols.push_back(std::size_t(it - csv.header.begin()));
    }
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      std::vector<std::string> vals;
      for (std::size_t c : cols) {
        if (c >= csv.rows[r].size()) throw DataError("row " + std::to_string(r + 1) + ": too few fields");
        vals.push_back(csv.rows[r][c]);
      }
      Term goal;
      try {
        goal = zoo::encode_tabular(schema, vals, std::nullopt, st);
      } catch (const DataError& e) {
        throw DataError("row " + std::to_string(r + 1) + ": " + e.what());
      }
      auto v = decode(p, goal);
      out << zoo::decode_class(v.decode) << "\t" << format_score(v.score) << "\n";
    }
  } else if (!d.grammar.empty()) {
    auto g = zoo::load_grammar(d.grammar);
    bool lc = d.parser == "leftcorner";
    auto progs = zoo::generate_cfg_programs(g);
    Program p = d.program.empty() ? parse_program(lc ? progs.leftcorner : progs.topdown) : load_program(d.program);
    std::ifstream in(d.data);
    if (!in) throw Error("cannot open " + d.data);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<std::string> words;
      if (line.find('(') != std::string::npos) {
        words = zoo::parse_tree(line).words();
      } else {
        std::istringstream ws(line);
        for (std::string w; ws >> w;) words.push_back(w);
      }
      auto v = decode(p, zoo::sentence_goal(words, lc));
      auto t = lc ? zoo::decode_leftcorner(g, words, v) : zoo::decode_topdown(g, v);
      out << zoo::to_string(t) << "\t" << format_score(v.score) << "\n";
    }
  } else {
    auto seqs = zoo::read_sequences(d.data);
    if (d.program.empty()) throw Error("predict on sequences needs --program (the trained state/vocabulary set)");
    Program p = load_program(d.program);
    for (const auto& s : seqs) {
      auto v = decode(p, zoo::encode_sequence(s.tokens));
      auto labels = zoo::decode_labels(v);
      for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "\t" : "") << labels[i];
      out << "\t" << format_score(v.score) << "\n";
    }
  }
  return 0;
}

struct TransformOptions {
  std::string program, script, out, log_out, check_goal, check_program, check_goal2;
  std::vector<std::string> probes, probe_lists;
  std::size_t limit = 100000;
};

std::vector<Probe> build_probes(const TransformOptions& t) {
  std::vector<Probe> out;
  for (const auto& p : t.probes) {
    auto eq = p.find('=');
    if (eq == std::string::npos) throw Error("--probe expects VAR=TERM, got " + p);
    out.push_back({{p.substr(0, eq), parse_term(p.substr(eq + 1)).term}});
  }
  for (const auto& spec : t.probe_lists) {
    // VAR:a,b,c:N — every list over the alphabet of length 1..N
    auto c1 = spec.find(':'), c2 = spec.rfind(':');
    if (c1 == std::string::npos || c1 == c2) throw Error("--probe-lists expects VAR:SYM,SYM,...:MAXLEN, got " + spec);
    std::string var = spec.substr(0, c1);
    std::vector<Term> alphabet;
    std::stringstream ss(spec.substr(c1 + 1, c2 - c1 - 1));
    for (std::string s; std::getline(ss, s, ',');) alphabet.push_back(parse_term(s).term);
    std::size_t n = std::stoul(spec.substr(c2 + 1));
    std::vector<std::vector<Term>> frontier{{}};
    for (std::size_t len = 1; len <= n; ++len) {
      std::vector<std::vector<Term>> next;
      for (const auto& f : frontier)
        for (const auto& a : alphabet) {
          auto x = f;
          x.push_back(a);
          out.push_back({{var, Term::list(x)}});
          next.push_back(std::move(x));
        }
      frontier = std::move(next);
    }
  }
  return out;
}

int cmd_transform(const TransformOptions& t) {
  Program p = load_program(t.program);
  auto res = apply_script(p, load_script(t.script));
  std::string log;
  for (const auto& l : res.log) log += l + "\n";
  if (!t.log_out.empty()) {
    std::ofstream os(t.log_out);
    os << log;
  } else {
    std::cerr << log;
  }
  std::string src = res.program.to_source();
  if (!t.out.empty()) {
    std::ofstream os(t.out);
    if (!os) throw Error("cannot write " + t.out);
    os << src;
  } else {
    std::cout << src;
  }
  if (t.check_goal.empty()) return 0;
  Program other = t.check_program.empty() ? p : load_program(t.check_program);
  auto rep = check_explanation_equivalence(res.program, t.check_goal, other,
                                           t.check_goal2.empty() ? t.check_goal : t.check_goal2, build_probes(t), t.limit);
  std::cerr << to_string(rep);
  return rep.all_equal() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative and discriminative learning over probabilistic logic programs"};
  app.require_subcommand(1);

  DataOptions d;
  FitOptions f;
  std::string params_out, report_out, params_in, metrics_out, predict_out;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  TransformOptions t;

  auto* train = app.add_subcommand("train", "Fit parameters; exit 0 on convergence, 2 if the iteration limit was hit");
  add_data_options(train, d);
  add_fit_options(train, f);
  train->add_option("--params-out", params_out, "Parameter table to write")->required();
  train->add_option("--report-out", report_out, "Fit report to write");

  auto* eval = app.add_subcommand("eval", "K-fold cross-validation");
  add_data_options(eval, d);
  add_fit_options(eval, f);
  eval->add_option("--folds", folds, "Number of folds")->check(CLI::Range(std::size_t(2), std::size_t(1000000)));
  eval->add_option("--seed", seed, "Shuffle seed");
  eval->add_option("--metrics-out", metrics_out, "Metrics report to write");

  auto* predict = app.add_subcommand("predict", "Viterbi-decode each input record");
  add_data_options(predict, d);
  predict->add_option("--params-in", params_in, "Parameter table")->required();
  predict->add_option("--out", predict_out, "Output file (default stdout)");

  auto* transform = app.add_subcommand("transform", "Apply an unfold/fold script and optionally probe equivalence");
  transform->add_option("--program", t.program, "Input program")->required();
  transform->add_option("--script", t.script, "Transformation script")->required();
  transform->add_option("--out", t.out, "Transformed program (default stdout)");
  transform->add_option("--log-out", t.log_out, "Derivation log (default stderr)");
  transform->add_option("--check-goal", t.check_goal, "Goal pattern to compare, e.g. hmm0(X)");
  transform->add_option("--check-program", t.check_program, "Program to compare against (default: the input)");
  transform->add_option("--check-goal2", t.check_goal2, "Goal pattern in the comparison program");
  transform->add_option("--probe", t.probes, "Probe binding VAR=TERM (repeatable)");
  transform->add_option("--probe-lists", t.probe_lists, "All lists VAR:SYM,...:MAXLEN (repeatable)");
  transform->add_option("--limit-explanations", t.limit, "Per-probe enumeration limit");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(d, f, params_out, report_out);
    if (*eval) return cmd_eval(d, f, folds, seed, metrics_out);
    if (*predict) return cmd_predict(d, params_in, predict_out);
    if (*transform) return cmd_transform(t);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
