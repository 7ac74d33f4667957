#pragma once

#include <vector>

#include "mlaqp/common.hpp"
#include "mlaqp/schema.hpp"

namespace mlaqp {

struct empty_sample : error {
    using error::error;
};
struct invalid_alpha : error {
    using error::error;
};
struct singular_covariance : error {
    using error::error;
};
struct vacuous_bound : error {
    using error::error;
};

// Sorted sample of aggregate answers; F(y) evaluated by binary search.
class AnswerEcdf {
public:
    AnswerEcdf() = default;
    explicit AnswerEcdf(std::vector<double> sample);

    void add(double y); // keeps the sample sorted
    std::size_t n() const { return sample_.size(); }
    double operator()(double y) const; // F(y) = #{x <= y} / n
    const std::vector<double>& sample() const { return sample_; }

private:
    std::vector<double> sample_;
};

// D = sup_y |F1(y) - F2(y)|, exact over the merged sample points.
double ks_statistic(const AnswerEcdf& f1, const AnswerEcdf& f2);

// c(alpha) * sqrt((n+m)/(n*m)) with c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_threshold(double alpha, std::size_t n, std::size_t m);

struct DataShiftResult {
    bool shifted = false;
    double statistic = 0.0;
    double threshold = 0.0;
};

DataShiftResult check_data_shift(const AnswerEcdf& train, const AnswerEcdf& monitored,
                                 double alpha);

// Mean/covariance of the training query vectors; covariance ridge-regularized
// with eps = 1e-6 * mean(diag). Missing slots are imputed with the running
// slot mean before moments accumulate.
class WorkloadStats {
public:
    WorkloadStats() = default;
    explicit WorkloadStats(std::size_t dimension);

    void add(const MetaVector& m);
    void finalize(); // factorizes the regularized covariance

    std::size_t dimension() const { return dim_; }
    std::size_t count() const { return count_; }
    double trace_term() const { return static_cast<double>(dim_); } // N = Tr[S^-1 S] = d
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& covariance() const { return cov_; } // row-major d x d
    const std::vector<double>& slot_means() const { return slot_mean_; }

    double mahalanobis(const MetaVector& m) const;

    // default k puts the Chebyshev bound N/k^2 at 0.05
    double default_k() const;

    static WorkloadStats restore(std::size_t dim, std::size_t count, std::vector<double> mean,
                                 std::vector<double> cov, std::vector<double> slot_mean,
                                 std::vector<std::size_t> slot_count);

private:
    std::vector<double> impute(const MetaVector& m) const;
    void factorize(); // Cholesky of cov_ into chol_

    std::size_t dim_ = 0;
    std::size_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> sum_outer_; // running sum of x x^T, row-major
    std::vector<double> cov_;
    std::vector<double> chol_;      // Cholesky factor of the regularized covariance
    std::vector<double> slot_mean_;
    std::vector<std::size_t> slot_count_;
    bool finalized_ = false;
};

struct WorkloadShiftResult {
    bool shifted = false;
    double exceedance = 0.0; // fraction of monitored vectors with distance >= k
    double bound = 0.0;      // N / k^2
};

WorkloadShiftResult check_workload_shift(const WorkloadStats& stats,
                                         const std::vector<MetaVector>& monitored, double k);

// Sliding-window monitor combining both tests; emits retrain recommendations.
class DriftMonitor {
public:
    static constexpr std::size_t kDefaultWindow = 500;

    DriftMonitor(AnswerEcdf train_answers, WorkloadStats train_queries, double alpha = 0.05,
                 std::size_t window = kDefaultWindow);

    struct Event {
        enum class Kind { data, workload } kind;
        double statistic;
        double threshold;
    };

    // Feeds one monitored query/answer; returns fired events (empty if none).
    std::vector<Event> observe(const MetaVector& query, double answer);

    double alpha() const { return alpha_; }
    std::size_t window() const { return window_; }
    const AnswerEcdf& train_answers() const { return train_answers_; }
    const WorkloadStats& train_queries() const { return train_queries_; }

private:
    AnswerEcdf train_answers_;
    WorkloadStats train_queries_;
    double alpha_;
    std::size_t window_;
    std::vector<double> answer_window_;
    std::vector<MetaVector> query_window_;
};

} // namespace mlaqp
