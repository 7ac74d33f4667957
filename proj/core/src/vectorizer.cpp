#include "mlaqp/vectorizer.hpp"

#include <algorithm>
#include <charconv>

namespace mlaqp {

std::uint64_t stable_hash64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double hash_to_real(const std::string& s) {
    return static_cast<double>(stable_hash64(s) >> 11); // [0, 2^53)
}

void CategoricalEncoder::fit_attribute(const Attribute& attr,
                                       std::vector<std::string> distinct_values) {
    if (attr.kind != AttrKind::categorical)
        throw error("fit_attribute on non-categorical '" + attr.name + "'");
    if (mode_of(attr) != CatMode::dummy) return;
    std::sort(distinct_values.begin(), distinct_values.end());
    distinct_values.erase(std::unique(distinct_values.begin(), distinct_values.end()),
                          distinct_values.end());
    dummy_values_[attr.name] = std::move(distinct_values);
}

CatMode CategoricalEncoder::mode_of(const Attribute& attr) const {
    if (attr.kind != AttrKind::categorical) return CatMode::hashed;
    return attr.cardinality && *attr.cardinality < threshold_ ? CatMode::dummy
                                                              : CatMode::hashed;
}

std::optional<std::size_t> CategoricalEncoder::dummy_column(const std::string& attr,
                                                            const std::string& value) const {
    auto it = dummy_values_.find(attr);
    if (it == dummy_values_.end()) return std::nullopt;
    const auto& vals = it->second;
    auto pos = std::lower_bound(vals.begin(), vals.end(), value);
    if (pos == vals.end() || *pos != value) return std::nullopt;
    return static_cast<std::size_t>(pos - vals.begin());
}

VectorLayout::VectorLayout(const DatasetSchema& schema, const CategoricalEncoder& enc) {
    width_ = 2 * schema.d();
    for (const auto& attr : schema.attributes) {
        if (attr.kind != AttrKind::categorical) continue;
        auto it = enc.dummy_values().find(attr.name);
        if (it == enc.dummy_values().end()) continue;
        dummy_block_start_[attr.name] = width_;
        width_ += 2 * it->second.size();
    }
}

std::optional<std::size_t> VectorLayout::dummy_block(const std::string& attr) const {
    auto it = dummy_block_start_.find(attr);
    if (it == dummy_block_start_.end()) return std::nullopt;
    return it->second;
}

void GroupByCatalogue::put(const Key& attrs, std::vector<ValueTuple> values) {
    if (attrs.empty()) throw error("group-by catalogue key must name at least one attribute");
    if (values.empty()) throw error("empty distinct-value list for catalogue entry");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    entries_[attrs] = std::move(values);
}

const std::vector<GroupByCatalogue::ValueTuple>* GroupByCatalogue::find(const Key& attrs) const {
    auto it = entries_.find(attrs);
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

// Writes one categorical equality into the vector; returns false when the
// value is unseen in dummy mode (the block stays missing).
bool encode_equality(MetaVector& m, const VectorLayout& layout, const DatasetSchema& schema,
                     const CategoricalEncoder& enc, std::size_t attr_index,
                     const std::string& value) {
    const Attribute& attr = schema.at(attr_index);
    if (attr.kind == AttrKind::categorical && enc.mode_of(attr) == CatMode::dummy) {
        auto col = enc.dummy_column(attr.name, value);
        if (!col) return false;
        auto block = layout.dummy_block(attr.name);
        std::size_t slot = *block + 2 * *col;
        m.values[slot] = 1.0;
        m.values[slot + 1] = 1.0;
        return true;
    }
    double v = hash_to_real(value);
    std::size_t slot = layout.base_slot(attr_index);
    m.values[slot] = v;
    m.values[slot + 1] = v;
    return true;
}

void fill_predicates(MetaVector& m, const VectorLayout& layout, const DatasetSchema& schema,
                     const CategoricalEncoder& enc, const ParsedQuery& q,
                     std::vector<EncodingWarning>& warnings) {
    for (const auto& p : q.predicates) {
        auto idx = schema.index_of(p.attribute);
        if (!idx) throw error("predicate on unknown attribute '" + p.attribute + "'");
        std::size_t slot = layout.base_slot(*idx);
        if (p.lb) m.values[slot] = *p.lb;
        if (p.ub) m.values[slot + 1] = *p.ub;
    }
    for (const auto& [attr, value] : q.categorical_equalities) {
        auto idx = schema.index_of(attr);
        if (!idx) throw error("equality on unknown attribute '" + attr + "'");
        if (!encode_equality(m, layout, schema, enc, *idx, value))
            warnings.push_back({attr, value});
    }
    // LIKE patterns are treated as plain strings and hashed
    for (const auto& [attr, pattern] : q.like_patterns) {
        auto idx = schema.index_of(attr);
        if (!idx) throw error("LIKE on unknown attribute '" + attr + "'");
        double v = hash_to_real(pattern);
        std::size_t slot = layout.base_slot(*idx);
        m.values[slot] = v;
        m.values[slot + 1] = v;
    }
}

} // namespace

VectorizeResult vectorize_spa(const ParsedQuery& q, const DatasetSchema& schema,
                              const CategoricalEncoder& enc) {
    if (!q.group_by.empty()) throw error("vectorize_spa on a grouped query");
    VectorLayout layout(schema, enc);
    VectorizeResult res;
    res.meta = MetaVector(layout.width());
    fill_predicates(res.meta, layout, schema, enc, q, res.warnings);
    return res;
}

std::vector<GroupRow> expand_group_by(const ParsedQuery& q, const GroupByCatalogue& cat,
                                      const DatasetSchema& schema, const CategoricalEncoder& enc,
                                      const DistinctProvider& provider) {
    if (q.group_by.empty()) throw error("expand_group_by on a non-grouped query");
    const std::vector<GroupByCatalogue::ValueTuple>* tuples = cat.find(q.group_by);
    std::vector<GroupByCatalogue::ValueTuple> fetched;
    if (!tuples) {
        if (!provider)
            throw missing_catalogue_entry("no cached distinct values for the GROUP BY key");
        fetched = provider(q.group_by);
        if (fetched.empty())
            throw missing_catalogue_entry("distinct-value provider returned nothing");
        tuples = &fetched;
    }
    VectorLayout layout(schema, enc);
    MetaVector base(layout.width());
    std::vector<EncodingWarning> warnings;
    fill_predicates(base, layout, schema, enc, q, warnings);

    std::vector<std::size_t> group_idx;
    for (const auto& g : q.group_by) {
        auto idx = schema.index_of(g);
        if (!idx) throw error("GROUP BY on unknown attribute '" + g + "'");
        group_idx.push_back(*idx);
    }

    std::vector<GroupRow> rows;
    rows.reserve(tuples->size());
    for (const auto& tuple : *tuples) {
        if (tuple.size() != group_idx.size())
            throw error("catalogue tuple arity does not match the GROUP BY key");
        GroupRow row;
        row.meta = base;
        row.group_values = tuple;
        for (std::size_t i = 0; i < group_idx.size(); ++i) {
            const Attribute& attr = schema.at(group_idx[i]);
            if (attr.kind == AttrKind::numeric) {
                double v = 0.0;
                const std::string& txt = tuple[i];
                auto [p, ec] = std::from_chars(txt.data(), txt.data() + txt.size(), v);
                if (ec != std::errc{})
                    throw error("non-numeric group value '" + txt + "' for '" + attr.name + "'");
                std::size_t slot = layout.base_slot(group_idx[i]);
                row.meta.values[slot] = v;
                row.meta.values[slot + 1] = v;
            } else {
                encode_equality(row.meta, layout, schema, enc, group_idx[i], tuple[i]);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace mlaqp
