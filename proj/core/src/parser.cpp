#include "tcrf/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "tcrf/errors.hpp"

namespace tcrf {

namespace {

enum class Tok { Atom, QAtom, Var, Int, Punct, End, Eof };

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  std::int64_t value = 0;
  bool functional = false;  // atom immediately followed by '('
  int line = 1;
  int column = 1;
};

bool is_symbol_char(char c) {
  switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '^': case '<': case '>':
    case '=': case '~': case ':': case '.': case '?': case '@': case '#': case '&':
    case '$':
      return true;
    default:
      return false;
  }
}

bool is_operator_name(const std::string& s) {
  return s == ":-" || s == ";" || s == "->" || s == "=" || s == "==" || s == "\\==" || s == "\\=" ||
         s == "+" || s == "-" || s == "*" || s == "/";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_layout();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::Eof;
      return t;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      read_int(t, false);
    } else if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
      t.kind = Tok::Var;
      t.text = read_ident();
    } else if (std::islower(static_cast<unsigned char>(c))) {
      t.kind = Tok::Atom;
      t.text = read_ident();
    } else if (c == '\'') {
      t.kind = Tok::QAtom;
      t.text = read_quoted();
    } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == '|' || c == ',' || c == '{' ||
               c == '}') {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      advance();
    } else if (c == '!' || c == ';') {
      t.kind = Tok::Atom;
      t.text = std::string(1, c);
      advance();
    } else if (is_symbol_char(c)) {
      if (c == '.' && end_follows(pos_ + 1)) {
        advance();
        t.kind = Tok::End;
        t.text = ".";
        return t;
      }
      if (c == '-' && pos_ + 1 < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) && prev_allows_sign_) {
        advance();
        read_int(t, true);
      } else {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_symbol_char(src_[pos_])) advance();
        t.kind = Tok::Atom;
        t.text = std::string(src_.substr(start, pos_ - start));
      }
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'", line_, col_);
    }
    if ((t.kind == Tok::Atom || t.kind == Tok::QAtom) && pos_ < src_.size() && src_[pos_] == '(')
      t.functional = true;
    prev_allows_sign_ = (t.kind == Tok::Punct && t.text != ")" && t.text != "]" && t.text != "}") ||
                        (t.kind == Tok::Atom && !t.functional && is_operator_name(t.text));
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_layout() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        advance();
        advance();
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= src_.size()) throw SyntaxError("unterminated block comment", line_, col_);
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  bool end_follows(std::size_t p) const {
    return p >= src_.size() || std::isspace(static_cast<unsigned char>(src_[p])) || src_[p] == '%';
  }

  std::string read_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  void read_int(Token& t, bool negative) {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      throw SyntaxError("malformed number", line_, col_);
    t.kind = Tok::Int;
    t.value = std::stoll(std::string(src_.substr(start, pos_ - start)));
    if (negative) t.value = -t.value;
  }

  std::string read_quoted() {
    int l = line_, c = col_;
    advance();
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) throw SyntaxError("unterminated quoted atom", l, c);
      char ch = src_[pos_];
      if (ch == '\\') {
        advance();
        if (pos_ >= src_.size()) throw SyntaxError("unterminated quoted atom", l, c);
        char e = src_[pos_];
        out += e == 'n' ? '\n' : (e == 't' ? '\t' : e);
        advance();
      } else if (ch == '\'') {
        advance();
        if (pos_ < src_.size() && src_[pos_] == '\'') {
          out += '\'';
          advance();
        } else {
          break;
        }
      } else {
        out += ch;
        advance();
      }
    }
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  bool prev_allows_sign_ = true;
};

enum class OpType { xfx, xfy, yfx };

struct InfixOp {
  int prec;
  OpType type;
};

const InfixOp* infix_op(const std::string& name) {
  static const std::unordered_map<std::string, InfixOp> ops = {
      {":-", {1200, OpType::xfx}}, {"-->", {1200, OpType::xfx}}, {";", {1100, OpType::xfy}},
      {"|", {1100, OpType::xfy}},  {"->", {1050, OpType::xfy}},  {",", {1000, OpType::xfy}},
      {"=", {700, OpType::xfx}},   {"==", {700, OpType::xfx}},   {"\\==", {700, OpType::xfx}},
      {"\\=", {700, OpType::xfx}}, {"-", {500, OpType::yfx}},    {"+", {500, OpType::yfx}},
      {"/", {400, OpType::yfx}},   {"*", {400, OpType::yfx}},
  };
  auto it = ops.find(name);
  return it == ops.end() ? nullptr : &it->second;
}

class Reader {
 public:
  explicit Reader(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

  bool at_eof() const { return tok_.kind == Tok::Eof; }

  /// Reads one term terminated by '.', with fresh variable scope.
  ParsedTerm read_clause() {
    vars_.clear();
    names_.clear();
    Term t = parse(1200);
    if (tok_.kind != Tok::End) fail("expected '.' at end of clause");
    tok_ = lex_.next();
    return {t, names_};
  }

  ParsedTerm read_single() {
    vars_.clear();
    names_.clear();
    Term t = parse(1200);
    if (tok_.kind == Tok::End) tok_ = lex_.next();
    if (tok_.kind != Tok::Eof) fail("unexpected text after term");
    return {t, names_};
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg + (tok_.text.empty() ? "" : " near '" + tok_.text + "'"), tok_.line,
                      tok_.column);
  }

  void expect_punct(const char* p) {
    if (tok_.kind != Tok::Punct || tok_.text != p) fail(std::string("expected '") + p + "'");
    tok_ = lex_.next();
  }

  bool is_punct(const char* p) const { return tok_.kind == Tok::Punct && tok_.text == p; }

  Term variable(const std::string& name) {
    if (name == "_") return Term::fresh_var();
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Term v = Term::fresh_var();
    vars_.emplace(name, v);
    names_.emplace(v.var_id(), name);
    return v;
  }

  // Name of the token if it can act as an infix operator here.
  std::optional<std::string> infix_name() const {
    if (tok_.kind == Tok::Atom) return tok_.text;
    if (tok_.kind == Tok::Punct && (tok_.text == "," || tok_.text == "|")) return tok_.text;
    return std::nullopt;
  }

  Term parse(int max_prec) {
    int left_prec = 0;
    Term left = parse_primary(left_prec);
    while (true) {
      auto name = infix_name();
      if (!name) break;
      const InfixOp* op = infix_op(*name);
      if (!op || op->prec > max_prec) break;
      int left_max = op->type == OpType::yfx ? op->prec : op->prec - 1;
      if (left_prec > left_max) break;
      int right_max = op->type == OpType::xfy ? op->prec : op->prec - 1;
      tok_ = lex_.next();
      Term right = parse(right_max);
      std::string functor = *name == "|" ? ";" : *name;
      left = Term::compound(functor, {left, right});
      left_prec = op->prec;
    }
    return left;
  }

  Term parse_primary(int& prec_out) {
    prec_out = 0;
    switch (tok_.kind) {
      case Tok::Int: {
        Term t = Term::integer(tok_.value);
        tok_ = lex_.next();
        return t;
      }
      case Tok::Var: {
        Term t = variable(tok_.text);
        tok_ = lex_.next();
        return t;
      }
      case Tok::Atom:
      case Tok::QAtom: {
        Token at = tok_;
        tok_ = lex_.next();
        if (at.functional) {
          expect_punct("(");
          std::vector<Term> args;
          args.push_back(parse(999));
          while (is_punct(",")) {
            tok_ = lex_.next();
            args.push_back(parse(999));
          }
          expect_punct(")");
          return Term::compound(at.text, std::move(args));
        }
        if (at.kind == Tok::Atom && at.text == "-" && tok_.kind == Tok::Int) {
          Term t = Term::integer(-tok_.value);
          tok_ = lex_.next();
          return t;
        }
        return Term::atom(at.text);
      }
      case Tok::Punct:
        if (tok_.text == "(") {
          tok_ = lex_.next();
          Term t = parse(1200);
          expect_punct(")");
          return t;
        }
        if (tok_.text == "[") {
          tok_ = lex_.next();
          if (is_punct("]")) {
            tok_ = lex_.next();
            return Term::nil();
          }
          std::vector<Term> items;
          items.push_back(parse(999));
          while (is_punct(",")) {
            tok_ = lex_.next();
            items.push_back(parse(999));
          }
          std::optional<Term> tail;
          if (is_punct("|")) {
            tok_ = lex_.next();
            tail = parse(999);
          }
          expect_punct("]");
          return Term::list(items, tail);
        }
        fail("unexpected punctuation");
      case Tok::End:
        fail("unexpected end of clause");
      case Tok::Eof:
        fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  Lexer lex_;
  Token tok_;
  std::unordered_map<std::string, Term> vars_;
  std::unordered_map<VarId, std::string> names_;
};

bool is_functor(const Term& t, const char* name, std::size_t arity) {
  return t.is_callable() && t.arity() == arity && t.functor().name() == name;
}

void body_from_term(const Term& t, GoalList& out);

GoalList body_list(const Term& t) {
  GoalList out;
  body_from_term(t, out);
  return out;
}

void body_from_term(const Term& t, GoalList& out) {
  if (t.is_var()) throw LoadError("variable used as a goal is not supported: " + to_string(t));
  if (t.is_int()) throw LoadError("integer used as a goal: " + to_string(t));
  if (is_functor(t, ",", 2)) {
    body_from_term(t.arg(0), out);
    body_from_term(t.arg(1), out);
    return;
  }
  if (is_functor(t, ";", 2)) {
    const Term& l = t.arg(0);
    if (is_functor(l, "->", 2)) {
      out.push_back(BodyGoal::if_then_else(body_list(l.arg(0)), body_list(l.arg(1)), body_list(t.arg(1))));
    } else {
      out.push_back(BodyGoal::disj(body_list(l), body_list(t.arg(1))));
    }
    return;
  }
  if (is_functor(t, "->", 2)) {
    out.push_back(BodyGoal::if_then_else(body_list(t.arg(0)), body_list(t.arg(1)), {BodyGoal::fail()}));
    return;
  }
  if (is_functor(t, "=", 2)) {
    out.push_back(BodyGoal::unify(t.arg(0), t.arg(1)));
    return;
  }
  if (is_functor(t, "==", 2)) {
    out.push_back(BodyGoal::strict_eq(t.arg(0), t.arg(1)));
    return;
  }
  if (is_functor(t, "true", 0)) {
    out.push_back(BodyGoal::truth());
    return;
  }
  if (is_functor(t, "fail", 0) || is_functor(t, "false", 0)) {
    out.push_back(BodyGoal::fail());
    return;
  }
  if (t.functor().name() == "msw") {
    if (t.arity() != 2) throw LoadError("msw must have exactly 2 arguments: " + to_string(t));
    out.push_back(BodyGoal::msw(t.arg(0), t.arg(1)));
    return;
  }
  if (is_functor(t, "!", 0)) throw LoadError("cut (!) is not supported");
  if (is_functor(t, "\\+", 1) || is_functor(t, "\\==", 2) || is_functor(t, "\\=", 2) ||
      is_functor(t, "is", 2))
    throw LoadError("unsupported builtin: " + to_string(t));
  out.push_back(BodyGoal::call(t));
}

}  // namespace

ParsedTerm parse_term(std::string_view text) {
  Reader r(text);
  return r.read_single();
}

std::vector<ParsedTerm> parse_clauses(std::string_view text) {
  Reader r(text);
  std::vector<ParsedTerm> out;
  while (!r.at_eof()) out.push_back(r.read_clause());
  return out;
}

Clause clause_from_term(const ParsedTerm& pt) {
  Clause c;
  c.var_names = pt.var_names;
  const Term& t = pt.term;
  if (is_functor(t, ":-", 2)) {
    c.head = t.arg(0);
    c.body = body_list(t.arg(1));
  } else if (is_functor(t, ":-", 1)) {
    throw LoadError("directives are not supported: " + to_string(t));
  } else {
    c.head = t;
  }
  if (c.head.is_var()) throw LoadError("clause head is a variable");
  if (!c.head.is_callable()) throw LoadError("clause head is not callable: " + to_string(c.head));
  const std::string& n = c.head.functor().name();
  if (n == "msw" || n == "," || n == ";" || n == "->" || n == "=" || n == "==" || n == "true" ||
      n == "fail")
    throw LoadError("cannot define builtin " + to_string(pred_key(c.head)));
  return c;
}

Program parse_program(std::string_view source) {
  std::vector<Clause> clauses;
  std::vector<SwitchDecl> decls;
  for (const auto& pt : parse_clauses(source)) {
    const Term& t = pt.term;
    if (is_functor(t, "values", 2)) {
      auto items = t.arg(1).list_items();
      if (!items) throw LoadError("values/2 outcomes must be a proper list: " + to_string(t));
      decls.push_back({t.arg(0), std::move(*items)});
      continue;
    }
    if (is_functor(t, ":-", 2) && is_functor(t.arg(0), "values", 2))
      throw LoadError("values/2 must be a fact");
    clauses.push_back(clause_from_term(pt));
  }
  return Program(std::move(clauses), std::move(decls));
}

Program load_program(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open program file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

}  // namespace tcrf
