#include "tcrf/zoo/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tcrf/errors.hpp"

namespace tcrf::zoo {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* head_name(Structure st) { return st == Structure::NaiveBayes ? "nb" : "bn"; }

// One variable name per attribute (and the class), from the first letter.
struct VarNames {
  std::string cls;
  std::vector<std::string> attr;
};

VarNames variable_names(const TabularSchema& s) {
  std::set<std::string> used{"Attrs"};
  auto pick = [&](const std::string& name) {
    std::string base = "X";
    if (!name.empty() && std::isalpha(static_cast<unsigned char>(name[0])))
      base = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(name[0]))));
    std::string v = base;
    for (int k = 2; used.count(v); ++k) v = base + std::to_string(k);
    used.insert(v);
    return v;
  };
  VarNames n;
  n.cls = pick(s.class_name);
  for (const auto& a : s.attributes) n.attr.push_back(pick(a.name));
  return n;
}

// Attribute indices in an order where parents come first; ties keep schema order.
std::vector<std::size_t> emission_order(const TabularSchema& s) {
  std::size_t n = s.attributes.size();
  std::vector<std::vector<std::size_t>> par(n);
  for (const auto& [child, ps] : s.parents) {
    std::size_t c = s.attribute_index(child);
    for (const auto& p : ps) {
      std::size_t pi = s.attribute_index(p);
      if (pi == c) throw DataError("attribute " + child + " lists itself as a parent");
      par[c].push_back(pi);
    }
  }
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::size_t> order;
  std::function<void(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 2) return;
    if (state[i] == 1) throw DataError("cyclic parent map at attribute " + s.attributes[i].name);
    state[i] = 1;
    for (std::size_t p : par[i]) visit(p);
    state[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < n; ++i) visit(i);
  return order;
}

std::string values_line(const Term& pattern, const std::vector<std::string>& vals) {
  std::vector<Term> ts;
  for (const auto& v : vals) ts.push_back(value_term(v));
  return "values(" + to_string(pattern) + "," + to_string(Term::list(ts)) + ").\n";
}

}  // namespace

std::size_t TabularSchema::attribute_index(const std::string& name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i].name == name) return i;
  throw DataError("unknown attribute " + name);
}

Structure parse_structure(const std::string& s) {
  if (s == "nb" || s == "naive_bayes") return Structure::NaiveBayes;
  if (s == "bnc" || s == "bn") return Structure::Bnc;
  throw Error("unknown structure '" + s + "' (expected nb or bnc)");
}

TabularSchema parse_schema(const std::string& text) {
  TabularSchema s;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool have_class = false;
  std::vector<std::pair<std::string, std::vector<std::string>>> pending_parents;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    auto where = "schema line " + std::to_string(lineno) + ": ";
    if (line.rfind("parents(", 0) == 0) {
      auto close = line.find(')');
      auto eq = line.find('=', close == std::string::npos ? 0 : close);
      if (close == std::string::npos || eq == std::string::npos)
        throw DataError(where + "expected parents(attr) = a,b");
      pending_parents.emplace_back(trim(line.substr(8, close - 8)), split_list(line.substr(eq + 1)));
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string::npos) throw DataError(where + "expected name: v1,v2,...");
    std::string name = trim(line.substr(0, colon));
    auto vals = split_list(line.substr(colon + 1));
    if (name.empty() || vals.empty()) throw DataError(where + "empty name or value list");
    if (std::set<std::string>(vals.begin(), vals.end()).size() != vals.size())
      throw DataError(where + "duplicate value for " + name);
    if (!have_class) {
      s.class_name = name;
      s.class_values = vals;
      have_class = true;
    } else {
      for (const auto& a : s.attributes)
        if (a.name == name) throw DataError(where + "duplicate attribute " + name);
      if (name == s.class_name) throw DataError(where + "attribute named like the class");
      s.attributes.push_back({name, vals});
    }
  }
  if (!have_class) throw DataError("schema has no class line");
  for (auto& [child, ps] : pending_parents) {
    s.attribute_index(child);
    for (const auto& p : ps) s.attribute_index(p);
    auto& dst = s.parents[child];
    dst.insert(dst.end(), ps.begin(), ps.end());
  }
  emission_order(s);  // reject cycles early
  return s;
}

TabularSchema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

Term value_term(const std::string& v) {
  if (!v.empty() && v.size() < 18 && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
      (v.size() == 1 || v[0] != '0'))
    return Term::integer(std::stoll(v));
  return Term::atom(v);
}

Term encode_tabular(const TabularSchema& s, const std::vector<std::string>& row,
                    const std::optional<std::string>& cls, Structure st) {
  if (row.size() != s.attributes.size())
    throw DataError("expected " + std::to_string(s.attributes.size()) + " attribute values, got " +
                    std::to_string(row.size()));
  std::vector<Term> vals;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& dom = s.attributes[i].values;
    if (std::find(dom.begin(), dom.end(), row[i]) == dom.end())
      throw DataError("value '" + row[i] + "' not in the domain of " + s.attributes[i].name);
    vals.push_back(value_term(row[i]));
  }
  std::vector<Term> args{Term::list(vals)};
  if (cls) {
    if (std::find(s.class_values.begin(), s.class_values.end(), *cls) == s.class_values.end())
      throw DataError("class value '" + *cls + "' not in the domain of " + s.class_name);
    args.push_back(value_term(*cls));
  }
  return Term::compound(head_name(st), std::move(args));
}

std::string generate_tabular_program(const TabularSchema& s, Structure st) {
  auto names = variable_names(s);
  std::vector<std::size_t> order;
  if (st == Structure::Bnc)
    order = emission_order(s);
  else
    for (std::size_t i = 0; i < s.attributes.size(); ++i) order.push_back(i);

  std::ostringstream out;
  out << values_line(Term::atom(s.class_name), s.class_values);
  for (const auto& a : s.attributes)
    out << "values(attr(" << to_string(Term::atom(a.name)) << ",_)," << [&] {
      std::vector<Term> ts;
      for (const auto& v : a.values) ts.push_back(value_term(v));
      return to_string(Term::list(ts));
    }() << ").\n";
  out << "\n";

  std::string list = "[";
  for (std::size_t i = 0; i < names.attr.size(); ++i) list += (i ? "," : "") + names.attr[i];
  list += "]";
  std::string cls_sw = to_string(Term::atom(s.class_name));

  if (st == Structure::NaiveBayes) {
    out << "nb(" << list << "," << names.cls << "):-\n    msw(" << cls_sw << "," << names.cls << ")";
    for (std::size_t i : order)
      out << ",\n    msw(attr(" << to_string(Term::atom(s.attributes[i].name)) << "," << names.cls << "),"
          << names.attr[i] << ")";
    out << ".\nnb(" << list << "):- nb(" << list << ",_).\n";
  } else {
    out << "bn(Attrs):- bn(Attrs,_).\nbn(Attrs," << names.cls << "):-\n   Attrs = " << list << ",\n   msw("
        << cls_sw << "," << names.cls << ")";
    for (std::size_t i : order) {
      std::string ctx = "[";
      auto it = s.parents.find(s.attributes[i].name);
      if (it != s.parents.end())
        for (const auto& p : it->second) ctx += names.attr[s.attribute_index(p)] + ",";
      ctx += names.cls + "]";
      out << ", msw(attr(" << to_string(Term::atom(s.attributes[i].name)) << "," << ctx << ")," << names.attr[i]
          << ")";
    }
    out << ".\n";
  }
  return out.str();
}

std::string decode_class(const Term& decoded) {
  if (!decoded.is_compound() || decoded.arity() != 2) throw DataError("not a decoded class goal: " + to_string(decoded));
  const Term& c = decoded.arg(1);
  if (c.is_int()) return std::to_string(c.int_value());
  if (c.is_atom()) return c.functor().name();
  throw DataError("class is not a constant in " + to_string(decoded));
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(trim(cur));
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

std::vector<Instance> tabular_instances(const TabularSchema& s, const CsvTable& t, Structure st) {
  auto column = [&](const std::string& name) {
    auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw DataError("CSV has no column " + name);
    return static_cast<std::size_t>(it - t.header.begin());
  };
  std::size_t ccol = column(s.class_name);
  std::vector<std::size_t> cols;
  for (const auto& a : s.attributes) cols.push_back(column(a.name));

  std::vector<Instance> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw DataError("row " + std::to_string(r + 1) + ": expected " + std::to_string(t.header.size()) + " fields");
    std::vector<std::string> vals;
    for (std::size_t c : cols) vals.push_back(row[c]);
    try {
      out.push_back({encode_tabular(s, vals, row[ccol], st), encode_tabular(s, vals, std::nullopt, st)});
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tcrf::zoo
