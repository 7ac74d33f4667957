#include "mlaqp/schema.hpp"

#include <unordered_set>

namespace mlaqp {

std::optional<std::size_t> DatasetSchema::index_of(const std::string& attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].name == attr) return i;
    return std::nullopt;
}

void DatasetSchema::validate() const {
    if (attributes.empty()) throw error("schema '" + name + "' has no attributes");
    std::unordered_set<std::string> seen;
    for (const auto& a : attributes) {
        if (!seen.insert(a.name).second)
            throw error("duplicate attribute name '" + a.name + "'");
        bool cat = a.kind == AttrKind::categorical;
        if (cat != a.cardinality.has_value())
            throw error("attribute '" + a.name + "': cardinality present iff categorical");
        if (cat && *a.cardinality < 1)
            throw error("attribute '" + a.name + "': cardinality must be >= 1");
    }
}

std::string to_string(AggFn fn) {
    switch (fn) {
        case AggFn::count: return "COUNT";
        case AggFn::sum: return "SUM";
        case AggFn::avg: return "AVG";
        case AggFn::min: return "MIN";
        case AggFn::max: return "MAX";
    }
    return "?";
}

std::optional<AggFn> agg_fn_from_string(const std::string& s) {
    if (s == "COUNT") return AggFn::count;
    if (s == "SUM") return AggFn::sum;
    if (s == "AVG") return AggFn::avg;
    if (s == "MIN") return AggFn::min;
    if (s == "MAX") return AggFn::max;
    return std::nullopt;
}

std::string AggregateSpec::key() const {
    return to_string(function) + "(" + target_attribute.value_or("*") + ")";
}

std::optional<AggregateSpec> aggregate_spec_from_key(const std::string& key) {
    auto open = key.find('(');
    if (open == std::string::npos || key.back() != ')') return std::nullopt;
    auto fn = agg_fn_from_string(key.substr(0, open));
    if (!fn) return std::nullopt;
    std::string arg = key.substr(open + 1, key.size() - open - 2);
    AggregateSpec spec;
    spec.function = *fn;
    if (arg != "*") spec.target_attribute = arg;
    return spec;
}

std::size_t MetaVector::present_count() const {
    std::size_t n = 0;
    for (double v : values)
        if (!is_missing(v)) ++n;
    return n;
}

bool MetaVector::operator==(const MetaVector& other) const {
    if (values.size() != other.values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        bool ma = is_missing(values[i]), mb = is_missing(other.values[i]);
        if (ma != mb) return false;
        if (!ma && values[i] != other.values[i]) return false;
    }
    return true;
}

std::string to_string(PairError e) {
    switch (e) {
        case PairError::ok: return "ok";
        case PairError::length_mismatch: return "LengthMismatch";
        case PairError::inverted_bounds: return "InvertedBounds";
        case PairError::non_finite_answer: return "NonFiniteAnswer";
    }
    return "?";
}

PairError validate_pair(const QueryAnswerPair& pair, std::size_t expected_width) {
    if (pair.meta.width() != expected_width) return PairError::length_mismatch;
    for (std::size_t i = 0; i + 1 < pair.meta.width(); i += 2) {
        double lo = pair.meta.values[i], hi = pair.meta.values[i + 1];
        if (!is_missing(lo) && !is_missing(hi) && lo > hi)
            return PairError::inverted_bounds;
    }
    if (!std::isfinite(pair.answer)) return PairError::non_finite_answer;
    return PairError::ok;
}

} // namespace mlaqp
