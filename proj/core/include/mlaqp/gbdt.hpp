#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlaqp/common.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

// Squared error for point prediction, pinball for conditional quantiles.
struct Loss {
    enum class Kind { squared, pinball };
    Kind kind = Kind::squared;
    double t = 0.5; // pinball level, strictly inside (0,1)

    static Loss squared() { return {Kind::squared, 0.5}; }
    static Loss pinball(double t);

    double operator()(double y, double yhat) const;
    bool operator==(const Loss&) const = default;
};

struct GbdtConfig {
    std::size_t rounds = 10000;
    double learning_rate = 0.1;
    std::size_t max_depth = 6;
    std::size_t min_samples_leaf = 20;
    std::optional<std::size_t> early_stopping_rounds = 50;
    double validation_fraction = 0.2;
    std::uint64_t seed = 1; // validation-split shuffle

    void validate() const;

    static GbdtConfig point_defaults();
    static GbdtConfig quantile_defaults();
};

// Flat-array binary tree. Internal nodes carry a default direction for rows
// whose split feature is missing; leaves carry the fitted value.
struct RegressionTree {
    struct Node {
        bool leaf = true;
        double value = 0.0;          // leaf
        std::size_t split_feature = 0;
        double split_threshold = 0.0;
        bool default_left = true;    // route for missing values
        std::int32_t left = -1;
        std::int32_t right = -1;
    };
    std::vector<Node> nodes; // nodes[0] is the root

    double predict(const std::vector<double>& x) const;
    std::size_t leaf_count() const;
};

struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
    Loss loss;
    std::size_t feature_width = 0;

    double predict(const MetaVector& m) const;
    double predict_row(const std::vector<double>& x) const;
};

// Dense training matrix; missing features are NaN.
struct TrainMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;

    std::size_t n() const { return rows.size(); }
    std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

TrainMatrix to_matrix(const TrainingSet& train);

struct insufficient_data : error {
    using error::error;
};
struct width_mismatch : error {
    using error::error;
};

struct SplitResult {
    std::size_t feature = 0;
    double threshold = 0.0;
    bool default_left = true;
    double gain = 0.0; // variance reduction on the split targets
};

// Exact sorted-scan split search over one feature. Tries routing the missing
// bucket both ways; ties break toward the lower threshold. Returns nullopt
// when no valid split exists (all present values identical, or leaf minimum
// unsatisfiable).
std::optional<SplitResult> find_best_split(const TrainMatrix& data,
                                           const std::vector<std::size_t>& row_idx,
                                           const std::vector<double>& gradients,
                                           std::size_t feature,
                                           std::size_t min_samples_leaf);

GbdtModel fit(const TrainMatrix& data, const GbdtConfig& cfg, const Loss& loss);
GbdtModel fit(const TrainingSet& train, const GbdtConfig& cfg, const Loss& loss);

// Empirical t-quantile as the lower order statistic ceil(t*n); any value in
// the minimizing interval of mean pinball loss would do.
double empirical_quantile(std::vector<double> values, double t);

} // namespace mlaqp
