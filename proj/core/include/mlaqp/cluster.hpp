#pragma once

#include <optional>
#include <vector>

#include "mlaqp/gbdt.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

struct empty_cluster_set : error {
    using error::error;
};

// Threshold-growth streaming k-means over sparse meta-vectors: a query
// farther than growth_threshold from every representative becomes a new one,
// otherwise the winner moves toward it with step 1/count (streaming mean).
// No preset K; the set grows as new query patterns appear.
//
// Distance over missing slots: missing-missing contributes 0; missing-present
// contributes the present value's squared deviation from that slot's running
// mean over all observed queries.
class ClusterSet {
public:
    // calibration_window: queries buffered before the threshold is derived
    // as 2x their median pairwise distance (ignored when an explicit
    // growth_threshold is given).
    explicit ClusterSet(std::optional<double> growth_threshold = std::nullopt,
                        std::size_t calibration_window = 100);

    void observe(const MetaVector& q);
    std::size_t assign(const MetaVector& q) const; // ties -> lowest index

    std::size_t size() const { return reps_.size(); }
    const std::vector<std::vector<double>>& representatives() const { return reps_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    double growth_threshold() const;
    bool calibrated() const { return threshold_.has_value(); }

    // Mean squared distance of the given queries to their representatives.
    double quantization_error(const std::vector<MetaVector>& queries) const;

    double distance2(const std::vector<double>& a, const std::vector<double>& b) const;

    // serialization support
    static ClusterSet restore(std::vector<std::vector<double>> reps,
                              std::vector<std::size_t> counts, double threshold,
                              std::vector<double> slot_mean, std::vector<std::size_t> slot_count);
    const std::vector<double>& slot_means() const { return slot_mean_; }
    const std::vector<std::size_t>& slot_counts() const { return slot_count_; }

private:
    void admit(const MetaVector& q);
    void update_slot_means(const MetaVector& q);
    void finalize_calibration();

    std::optional<double> threshold_;
    std::size_t calibration_window_;
    std::vector<MetaVector> pending_; // buffered during calibration
    std::vector<std::vector<double>> reps_;
    std::vector<std::size_t> counts_;
    std::vector<double> slot_mean_;        // running mean of present slot values
    std::vector<std::size_t> slot_count_;
};

struct ClusterEnsemble {
    ClusterSet clusters;
    std::vector<GbdtModel> local_models;     // one per cluster
    std::vector<double> generalization_error; // per-cluster 5-fold CV MSE

    // Indicator ensemble: only the assigned cluster's model answers.
    double predict(const MetaVector& q) const;
};

// Disjoint partition by assign(); clusters with fewer than min_samples_leaf
// pairs are merged into their nearest representative before fitting.
ClusterEnsemble fit_local_models(const ClusterSet& cs, const TrainingSet& pairs,
                                 const GbdtConfig& cfg);

// k-fold cross-validated MSE of a squared-loss fit; shared by the ensemble
// error estimate and the global/local comparison.
double cross_validated_mse(const TrainMatrix& data, const GbdtConfig& cfg,
                           std::size_t folds = 5, std::uint64_t seed = 7);

} // namespace mlaqp
