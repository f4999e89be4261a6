#include "tcrf/zoo/sequence.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/zoo/tabular.hpp"

namespace tcrf::zoo {

namespace {

std::string constant_name(const Term& t) {
  if (t.is_int()) return std::to_string(t.int_value());
  if (t.is_atom()) return t.functor().name();
  return to_string(t);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string term_list(const std::vector<std::string>& vals) {
  std::vector<Term> ts;
  for (const auto& v : vals) ts.push_back(value_term(v));
  return to_string(Term::list(ts));
}

std::vector<std::string> distinct(const std::vector<LabeledSequence>& seqs, bool labels) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : seqs)
    for (const auto& v : labels ? s.labels : s.tokens)
      if (seen.insert(v).second) out.push_back(v);
  return out;
}

std::size_t draw(const std::vector<double>& p, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> d(p.begin(), p.end());
  return d(rng);
}

}  // namespace

std::string generate_hmm_program(const std::vector<std::string>& states, const std::vector<std::string>& vocab) {
  if (states.empty() || vocab.empty()) throw DataError("HMM needs at least one state and one symbol");
  std::ostringstream out;
  out << "values(init," << term_list(states) << ").\n"
      << "values(tr(_)," << term_list(states) << ").\n"
      << "values(out(_)," << term_list(vocab) << ").\n\n"
      << "hmm0([X0|Xs],[Y0|Ys]):- msw(init,Y0),msw(out(Y0),X0),hmm1(Y0,Xs,Ys).\n"
      << "hmm1(_,[],[]).\n"
      << "hmm1(Y0,[X|Xs],[Y|Ys]):- msw(tr(Y0),Y),msw(out(Y),X),hmm1(Y,Xs,Ys).\n\n"
      << "hmm0([X|Xs]):- msw(init,Y0),msw(out(Y0),X),hmm1(Y0,Xs).\n"
      << "hmm1(_,[]).\n"
      << "hmm1(Y0,[X|Xs]):- msw(tr(Y0),Y),msw(out(Y),X),hmm1(Y,Xs).\n";
  return out.str();
}

Term encode_sequence(const std::vector<std::string>& tokens, const std::vector<std::string>& labels) {
  if (tokens.empty()) throw DataError("empty sequence");
  std::vector<Term> xs;
  for (const auto& t : tokens) xs.push_back(value_term(t));
  if (labels.empty()) return Term::compound("hmm0", {Term::list(xs)});
  if (labels.size() != tokens.size())
    throw DataError("sequence has " + std::to_string(tokens.size()) + " tokens but " + std::to_string(labels.size()) +
                    " labels");
  std::vector<Term> ys;
  for (const auto& l : labels) ys.push_back(value_term(l));
  return Term::compound("hmm0", {Term::list(xs), Term::list(ys)});
}

std::vector<std::string> decode_labels(const ViterbiResult& r) {
  static const Symbol init("init"), tr("tr");
  std::vector<std::string> out;
  for (const auto& [sw, v] : r.sequence)
    if ((sw.is_atom() && sw.functor() == init) || (sw.is_compound() && sw.functor() == tr && sw.arity() == 1))
      out.push_back(constant_name(v));
  return out;
}

std::vector<LabeledSequence> parse_sequences(const std::string& text) {
  std::vector<LabeledSequence> out;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> block;
  int lineno = 0, start = 0;
  auto flush = [&] {
    if (block.empty()) return;
    if (block.size() > 2)
      throw DataError("sequence record at line " + std::to_string(start) + " has more than two lines");
    LabeledSequence s;
    s.tokens = split_tabs(block[0]);
    if (block.size() == 2) {
      s.labels = split_tabs(block[1]);
      if (s.labels.size() != s.tokens.size())
        throw DataError("sequence record at line " + std::to_string(start) + ": " + std::to_string(s.tokens.size()) +
                        " tokens but " + std::to_string(s.labels.size()) + " labels");
    }
    out.push_back(std::move(s));
    block.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (block.empty()) start = lineno;
    block.push_back(line);
  }
  flush();
  return out;
}

std::vector<LabeledSequence> read_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sequences(ss.str());
}

std::string format_sequences(const std::vector<LabeledSequence>& seqs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (i) out << "\n";
    auto line = [&](const std::vector<std::string>& v) {
      for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "\t" : "") << v[k];
      out << "\n";
    };
    line(seqs[i].tokens);
    if (!seqs[i].labels.empty()) line(seqs[i].labels);
  }
  return out.str();
}

std::vector<std::string> collect_states(const std::vector<LabeledSequence>& seqs) { return distinct(seqs, true); }
std::vector<std::string> collect_vocab(const std::vector<LabeledSequence>& seqs) { return distinct(seqs, false); }

std::vector<Instance> sequence_instances(const std::vector<LabeledSequence>& seqs) {
  std::vector<Instance> out;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].labels.empty()) throw DataError("sequence " + std::to_string(i + 1) + " has no labels");
    out.push_back({encode_sequence(seqs[i].tokens, seqs[i].labels), encode_sequence(seqs[i].tokens)});
  }
  return out;
}

Hmm Hmm::random(std::size_t n_states, std::size_t n_symbols, std::mt19937_64& rng, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  auto dirichlet = [&](std::size_t k) {
    std::vector<double> p(k);
    double s = 0;
    for (auto& x : p) s += (x = gamma(rng) + 1e-12);
    for (auto& x : p) x /= s;
    return p;
  };
  Hmm h;
  for (std::size_t i = 0; i < n_states; ++i) h.states.push_back("s" + std::to_string(i));
  for (std::size_t i = 0; i < n_symbols; ++i) h.vocab.push_back("w" + std::to_string(i));
  h.init = dirichlet(n_states);
  for (std::size_t i = 0; i < n_states; ++i) {
    h.trans.push_back(dirichlet(n_states));
    h.emit.push_back(dirichlet(n_symbols));
  }
  return h;
}

LabeledSequence Hmm::sample(std::size_t length, std::mt19937_64& rng) const {
  LabeledSequence s;
  std::size_t y = draw(init, rng);
  for (std::size_t t = 0; t < length; ++t) {
    if (t) y = draw(trans[y], rng);
    s.labels.push_back(states[y]);
    s.tokens.push_back(vocab[draw(emit[y], rng)]);
  }
  return s;
}

}  // namespace tcrf::zoo
