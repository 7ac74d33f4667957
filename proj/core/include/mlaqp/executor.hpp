#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mlaqp/parser.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

struct Column {
    std::vector<double> nums;        // numeric attributes
    std::vector<std::string> strs;   // categorical attributes
};

// Immutable after load; stands in for the data warehouse at desk scale.
struct ColumnarDataset {
    DatasetSchema schema;
    std::vector<Column> columns; // parallel to schema.attributes

    std::size_t rows() const;
    void validate() const; // column lengths equal, numeric values finite
};

// CSV with a header row plus a JSON schema side-file (see docs/file-formats.md).
DatasetSchema load_schema_json(const std::string& path);
ColumnarDataset load_csv(const std::string& csv_path, const std::string& schema_path);
void save_csv(const ColumnarDataset& ds, const std::string& csv_path,
              const std::string& schema_path);

// Per-AF results keyed by AggregateSpec::key(). AVG/MIN/MAX over an empty
// selection are omitted from the map and empty_selection is set; COUNT is 0
// and SUM is 0 in that case.
struct AggregateAnswer {
    std::map<std::string, double> values;
    bool empty_selection = false;
};

AggregateAnswer execute_aggregate(const ColumnarDataset& ds, const ParsedQuery& q);

// Grouped execution: one AggregateAnswer per observed group tuple.
std::map<std::vector<std::string>, AggregateAnswer>
execute_group_by(const ColumnarDataset& ds, const ParsedQuery& q);

// Sorted, deduplicated tuples of the given attributes' observed values.
std::vector<std::vector<std::string>>
select_distinct(const ColumnarDataset& ds, const std::vector<std::string>& attrs);

// SQL LIKE with % and _ wildcards.
bool like_match(const std::string& value, const std::string& pattern);

} // namespace mlaqp
