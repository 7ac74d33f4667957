#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlaqp/common.hpp"

namespace mlaqp {

enum class AttrKind { numeric, categorical };

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::numeric;
    std::optional<std::size_t> cardinality; // categorical only
};

// Attribute order is fixed and defines the meta-vector layout: attribute i
// owns slots (2i, 2i+1).
struct DatasetSchema {
    std::string name;
    std::vector<Attribute> attributes;

    std::size_t d() const { return attributes.size(); }
    std::optional<std::size_t> index_of(const std::string& attr) const;
    const Attribute& at(std::size_t i) const { return attributes[i]; }

    void validate() const; // unique names, d >= 1, cardinality iff categorical
};

enum class AggFn { count, sum, avg, min, max };

std::string to_string(AggFn fn);
std::optional<AggFn> agg_fn_from_string(const std::string& s);

struct AggregateSpec {
    AggFn function = AggFn::count;
    std::optional<std::string> target_attribute; // absent for COUNT(*)

    // Canonical catalogue key, e.g. "AVG(a3)" or "COUNT(*)".
    std::string key() const;
    bool operator==(const AggregateSpec&) const = default;
};

std::optional<AggregateSpec> aggregate_spec_from_key(const std::string& key);

// One interval per attribute; equality is lb == ub; one-sided predicates
// leave the other bound absent.
struct Predicate {
    std::string attribute;
    std::optional<double> lb;
    std::optional<double> ub;
};

struct MetaVector {
    std::vector<double> values; // NaN == missing

    MetaVector() = default;
    explicit MetaVector(std::size_t width)
        : values(width, missing_value()) {}

    std::size_t width() const { return values.size(); }
    bool present(std::size_t slot) const { return !is_missing(values[slot]); }
    std::size_t present_count() const;
    bool operator==(const MetaVector& other) const;
};

struct QueryAnswerPair {
    MetaVector meta;
    AggregateSpec af;
    double answer = 0.0;
};

// Per-AF training partition: every pair shares the same aggregate.
struct TrainingSet {
    AggregateSpec af;
    std::vector<QueryAnswerPair> pairs;
};

enum class PairError { ok, length_mismatch, inverted_bounds, non_finite_answer };

std::string to_string(PairError e);

// Checks meta width against the expected slot count, per-pair bound ordering
// (slot 2i <= slot 2i+1 when both present) and answer finiteness.
PairError validate_pair(const QueryAnswerPair& pair, std::size_t expected_width);

} // namespace mlaqp
