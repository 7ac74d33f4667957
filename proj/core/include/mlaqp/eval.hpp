#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlaqp/catalogue.hpp"
#include "mlaqp/gbdt.hpp"
#include "mlaqp/intervals.hpp"

namespace mlaqp {

struct zero_truth : error {
    using error::error;
};
struct zero_mean : error {
    using error::error;
};
struct insufficient_workload : error {
    using error::error;
};

// |y - yhat| / |y|
double relative_error(double y, double yhat);
// |y - yhat| / |ybar|
double normalized_error(double y, double yhat, double ybar);
// exact order statistic (lower median for even sizes)
double exact_median(std::vector<double> values);

struct LatencySummary {
    double mean_micros = 0.0;
    double p95_micros = 0.0;
};

struct AfMetrics {
    double median_relative_error = 0.0;
    double median_normalized_error = 0.0;
    double median_absolute_error = 0.0;
    std::optional<double> coverage_ratio;
    std::size_t n_test = 0;
    std::size_t zero_truth_excluded = 0; // rows where relative error is undefined
};

struct EvalReport {
    std::map<std::string, AfMetrics> per_af;
    LatencySummary inference;   // model predict only
    LatencySummary end_to_end;  // parse + vectorize + predict
    std::uintmax_t catalogue_bytes = 0;
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> error_curves;

    std::string to_text() const;
    std::string to_json() const;
};

struct EvalConfig {
    double split = 0.7;
    std::uint64_t split_seed = 13;
    double interval_t = 0.1;               // levels 0.05 / 0.95, nominal 90%
    bool with_intervals = true;
    bool with_ensemble = false;
    std::vector<std::size_t> curve_points; // e.g. {100, 300, 1000}
    GbdtConfig point_cfg;
    GbdtConfig quantile_cfg;

    EvalConfig()
        : point_cfg(GbdtConfig::point_defaults()),
          quantile_cfg(GbdtConfig::quantile_defaults()) {}
};

// Deterministic seeded 70/30 split.
void split_training_set(const TrainingSet& all, double split, std::uint64_t seed,
                        TrainingSet& train, TrainingSet& test);

// Trains per-AF point (+ interval) models on the split's training part and
// measures every metric on the held-out part. Needs >= 10 pairs per AF.
// latency_sqls, when non-empty, drives the end-to-end (parse + vectorize +
// predict) latency measurement; inference latency always uses the held-out
// vectors directly.
EvalReport run_protocol(const std::map<std::string, TrainingSet>& workload,
                        const DatasetSchema& schema, const CategoricalEncoder& encoder,
                        const std::vector<std::string>& latency_sqls, const EvalConfig& cfg);

// Builds a prediction-ready catalogue from per-AF training sets (shared by
// run_protocol and the train CLI command).
ModelCatalogue build_catalogue(const std::map<std::string, TrainingSet>& per_af,
                               const DatasetSchema& schema, const CategoricalEncoder& encoder,
                               const EvalConfig& cfg);

} // namespace mlaqp
