#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tcrf/learning.hpp"
#include "tcrf/term.hpp"

namespace tcrf::zoo {

struct Attribute {
  std::string name;
  std::vector<std::string> values;
};

/// Class variable, attributes and (for BNCs) extra parents per attribute.
struct TabularSchema {
  std::string class_name;
  std::vector<std::string> class_values;
  std::vector<Attribute> attributes;
  std::map<std::string, std::vector<std::string>> parents;

  std::size_t attribute_index(const std::string& name) const;
};

enum class Structure { NaiveBayes, Bnc };

Structure parse_structure(const std::string& s);

/// Schema file: `class: v1,v2,...` first, then `attr: v1,...` lines and
/// optional `parents(attr) = a,b` lines. `#` starts a comment.
TabularSchema parse_schema(const std::string& text);
TabularSchema load_schema(const std::string& path);

/// Digit strings become integers, everything else an atom.
Term value_term(const std::string& v);

/// nb([...],c) / bn([...],c), or the incomplete form when `cls` is empty.
/// Throws DataError on an out-of-domain value.
Term encode_tabular(const TabularSchema& s, const std::vector<std::string>& row,
                    const std::optional<std::string>& cls, Structure st);

/// Program text in the shape of the naive Bayes / BNC figures.
/// Throws DataError on a cyclic or dangling parent map.
std::string generate_tabular_program(const TabularSchema& s, Structure st);

/// Class label from a decoded complete goal.
std::string decode_class(const Term& decoded);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// Instances for every CSV row, columns matched to the schema by name.
/// Errors name the offending row (1-based, excluding the header).
std::vector<Instance> tabular_instances(const TabularSchema& s, const CsvTable& t, Structure st);

}  // namespace tcrf::zoo
