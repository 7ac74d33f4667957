#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlaqp/parser.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

// FNV-1a, folded into [0, 2^53) so the real is exactly representable.
// Fixed constants; stable across runs and platforms.
std::uint64_t stable_hash64(const std::string& s);
double hash_to_real(const std::string& s);

enum class CatMode { dummy, hashed };

// Per-attribute categorical encoding. Attributes with cardinality below the
// threshold get one dummy slot-pair per distinct value; the rest are hashed
// into their base (lb, ub) pair.
class CategoricalEncoder {
public:
    static constexpr std::size_t kDefaultCardinalityThreshold = 1000;

    explicit CategoricalEncoder(std::size_t cardinality_threshold = kDefaultCardinalityThreshold)
        : threshold_(cardinality_threshold) {}

    // Registers the distinct values of a dummy-mode attribute. Value order is
    // sorted internally so the column map is deterministic.
    void fit_attribute(const Attribute& attr, std::vector<std::string> distinct_values);

    CatMode mode_of(const Attribute& attr) const;
    std::size_t cardinality_threshold() const { return threshold_; }

    // Dummy column index for (attr, value); nullopt when unseen or hashed-mode.
    std::optional<std::size_t> dummy_column(const std::string& attr,
                                            const std::string& value) const;
    const std::map<std::string, std::vector<std::string>>& dummy_values() const {
        return dummy_values_;
    }

    bool operator==(const CategoricalEncoder&) const = default;

private:
    std::size_t threshold_;
    std::map<std::string, std::vector<std::string>> dummy_values_; // attr -> sorted values
};

// Slot layout for a (schema, encoder) pair: the 2d base pairs first, then one
// slot-pair per dummy column, so numeric slot indices are schema-stable.
class VectorLayout {
public:
    VectorLayout(const DatasetSchema& schema, const CategoricalEncoder& enc);

    std::size_t width() const { return width_; }
    std::size_t base_slot(std::size_t attr_index) const { return 2 * attr_index; }
    // First slot of attr's dummy block; nullopt when the attribute has none.
    std::optional<std::size_t> dummy_block(const std::string& attr) const;

private:
    std::size_t width_;
    std::map<std::string, std::size_t> dummy_block_start_;
};

// GROUP-BY catalogue: cached SELECT-DISTINCT results per attribute tuple.
class GroupByCatalogue {
public:
    using Key = std::vector<std::string>;          // attribute names
    using ValueTuple = std::vector<std::string>;   // one distinct combination

    void put(const Key& attrs, std::vector<ValueTuple> values);
    const std::vector<ValueTuple>* find(const Key& attrs) const;
    bool empty() const { return entries_.empty(); }
    const std::map<Key, std::vector<ValueTuple>>& entries() const { return entries_; }

private:
    std::map<Key, std::vector<ValueTuple>> entries_;
};

struct EncodingWarning {
    std::string attribute;
    std::string value;
};

struct VectorizeResult {
    MetaVector meta;
    std::vector<EncodingWarning> warnings; // unseen dummy-mode values, left missing
};

struct missing_catalogue_entry : error {
    using error::error;
};

// SPA vectorization: q.group_by must be empty.
VectorizeResult vectorize_spa(const ParsedQuery& q, const DatasetSchema& schema,
                              const CategoricalEncoder& enc);

struct GroupRow {
    MetaVector meta;
    GroupByCatalogue::ValueTuple group_values;
};

// Optional fallback when the tuple is not cached (training mode attaches the
// exact executor here); returning distinct tuples for the requested attrs.
using DistinctProvider =
    std::function<std::vector<GroupByCatalogue::ValueTuple>(const std::vector<std::string>&)>;

// Expands a grouped query into one meta-vector per cached group tuple; the
// group attribute slots carry the encoded value as an equality.
std::vector<GroupRow> expand_group_by(const ParsedQuery& q, const GroupByCatalogue& cat,
                                      const DatasetSchema& schema, const CategoricalEncoder& enc,
                                      const DistinctProvider& provider = nullptr);

} // namespace mlaqp
