#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlaqp/executor.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

struct degenerate_range : error {
    using error::error;
};

struct WorkloadSpec {
    std::size_t n_queries = 1000;
    std::size_t dims = 10;
    std::size_t predicates = 2;
    double range_size = 0.0;
    std::uint64_t seed = 42;
    std::vector<AggregateSpec> afs;

    void validate() const; // predicates <= dims, n_queries >= 1, range_size > 0
};

// d numeric columns of i.i.d. uniforms on [1e-8, 1e8], seeded.
ColumnarDataset gen_dataset(std::size_t d, std::size_t n_rows, std::uint64_t seed);

// Mean histogram bin width over the numeric columns: (max - min) / n_bins.
double derive_range_size(const ColumnarDataset& ds, std::size_t n_bins);

struct GeneratedQuery {
    std::string sql;
    ParsedQuery parsed;
    AggregateAnswer answers;
};

// One query: p distinct columns restricted to [center - r/2, center + r/2],
// centers clamped into the data domain; all AFs executed exactly. Queries
// whose selection is empty are resampled (up to 20 attempts).
std::vector<GeneratedQuery> gen_queries(const WorkloadSpec& spec, const ColumnarDataset& ds);

// Per-AF training pairs from generated queries (empty-selection AFs dropped).
std::map<std::string, TrainingSet> to_training_sets(const std::vector<GeneratedQuery>& queries,
                                                    const DatasetSchema& schema);

// Predicate centers drawn from n_analysts Gaussians with random means inside
// the data bounding box; produces the clustered query pattern local models
// exploit.
std::vector<GeneratedQuery> gen_analyst_workload(const ColumnarDataset& ds,
                                                 std::size_t n_analysts,
                                                 double per_analyst_sigma, std::size_t n_queries,
                                                 const std::vector<AggregateSpec>& afs,
                                                 double range_size, std::uint64_t seed);

// Query-log JSON-lines format: {"sql": ..., "answers": {"AF(attr)": num}},
// grouped queries additionally carry "groups": [{"key": [...], "answers": ...}].
struct LogLine {
    std::string sql;
    std::map<std::string, double> answers;
    std::vector<std::pair<std::vector<std::string>, std::map<std::string, double>>> groups;
};

void write_query_log(const std::vector<GeneratedQuery>& queries, const std::string& path);
void append_log_line(std::ostream& out, const LogLine& line);
std::vector<LogLine> read_query_log(const std::string& path);
LogLine parse_log_line(const std::string& text);

} // namespace mlaqp
