#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mlaqp/schema.hpp"

namespace mlaqp {

struct ParsedQuery {
    std::string table;
    std::vector<AggregateSpec> aggregates;
    std::vector<Predicate> predicates; // merged: at most one interval per attribute
    std::vector<std::string> group_by;
    std::vector<std::pair<std::string, std::string>> categorical_equalities;
    std::vector<std::pair<std::string, std::string>> like_patterns;
};

enum class ParseErrorKind { syntax, unsupported_feature, unknown_identifier };

struct parse_error : error {
    ParseErrorKind kind;
    std::size_t position; // byte offset into the input text

    parse_error(ParseErrorKind k, std::size_t pos, const std::string& msg)
        : error(msg + " (at offset " + std::to_string(pos) + ")"),
          kind(k), position(pos) {}
};

// Supported grammar (see docs/sql-grammar.md):
//   SELECT <af-list> FROM <table-list> [WHERE <conjunction>] [GROUP BY <attrs>]
// Comparisons >=, >, <=, <, =, BETWEEN map onto (lb, ub); strict operators are
// treated as inclusive. Equi-join conditions between two attributes are
// accepted and ignored. OR, NOT and subqueries raise unsupported_feature.
ParsedQuery parse(const std::string& sql, const DatasetSchema& schema);

} // namespace mlaqp
