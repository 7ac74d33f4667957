#include "mlaqp/drift.hpp"

#include <algorithm>
#include <cmath>

namespace mlaqp {

AnswerEcdf::AnswerEcdf(std::vector<double> sample) : sample_(std::move(sample)) {
    std::sort(sample_.begin(), sample_.end());
}

void AnswerEcdf::add(double y) {
    sample_.insert(std::upper_bound(sample_.begin(), sample_.end(), y), y);
}

double AnswerEcdf::operator()(double y) const {
    if (sample_.empty()) throw empty_sample("ECDF of an empty sample");
    auto it = std::upper_bound(sample_.begin(), sample_.end(), y);
    return static_cast<double>(it - sample_.begin()) / static_cast<double>(sample_.size());
}

double ks_statistic(const AnswerEcdf& f1, const AnswerEcdf& f2) {
    if (f1.n() == 0 || f2.n() == 0) throw empty_sample("KS statistic needs two non-empty samples");
    // sup over step points of both ECDFs: walk the merged sorted samples
    const auto& a = f1.sample();
    const auto& b = f2.sample();
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        double y = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= y) ++i;
        while (j < b.size() && b[j] <= y) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_threshold(double alpha, std::size_t n, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_alpha("alpha must lie inside (0,1)");
    if (n < 1 || m < 1) throw empty_sample("KS threshold needs n, m >= 1");
    double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

DataShiftResult check_data_shift(const AnswerEcdf& train, const AnswerEcdf& monitored,
                                 double alpha) {
    DataShiftResult r;
    r.statistic = ks_statistic(train, monitored);
    r.threshold = ks_threshold(alpha, train.n(), monitored.n());
    r.shifted = r.statistic > r.threshold;
    return r;
}

WorkloadStats::WorkloadStats(std::size_t dimension)
    : dim_(dimension),
      mean_(dimension, 0.0),
      sum_outer_(dimension * dimension, 0.0),
      slot_mean_(dimension, 0.0),
      slot_count_(dimension, 0) {}

std::vector<double> WorkloadStats::impute(const MetaVector& m) const {
    if (m.width() != dim_) throw error("meta-vector width does not match workload stats");
    std::vector<double> x(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        x[i] = is_missing(m.values[i]) ? slot_mean_[i] : m.values[i];
    return x;
}

void WorkloadStats::add(const MetaVector& m) {
    if (m.width() != dim_) throw error("meta-vector width does not match workload stats");
    for (std::size_t i = 0; i < dim_; ++i) {
        if (is_missing(m.values[i])) continue;
        ++slot_count_[i];
        slot_mean_[i] += (m.values[i] - slot_mean_[i]) / static_cast<double>(slot_count_[i]);
    }
    std::vector<double> x = impute(m);
    ++count_;
    double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < dim_; ++i) mean_[i] += (x[i] - mean_[i]) * inv;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) sum_outer_[i * dim_ + j] += x[i] * x[j];
    finalized_ = false;
}

void WorkloadStats::finalize() {
    if (count_ < 2) throw error("need at least 2 vectors to form a covariance");
    cov_.assign(dim_ * dim_, 0.0);
    double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            cov_[i * dim_ + j] = sum_outer_[i * dim_ + j] / n - mean_[i] * mean_[j];

    double diag_mean = 0;
    for (std::size_t i = 0; i < dim_; ++i) diag_mean += cov_[i * dim_ + i];
    diag_mean /= static_cast<double>(dim_);
    double eps = 1e-6 * std::max(diag_mean, 1e-12);
    for (std::size_t i = 0; i < dim_; ++i) cov_[i * dim_ + i] += eps;

    factorize();
    finalized_ = true;
}

void WorkloadStats::factorize() {
    chol_.assign(dim_ * dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = cov_[i * dim_ + j];
            for (std::size_t k = 0; k < j; ++k) s -= chol_[i * dim_ + k] * chol_[j * dim_ + k];
            if (i == j) {
                if (s <= 0.0)
                    throw singular_covariance("covariance not positive definite after ridge");
                chol_[i * dim_ + i] = std::sqrt(s);
            } else {
                chol_[i * dim_ + j] = s / chol_[j * dim_ + j];
            }
        }
    }
}

double WorkloadStats::mahalanobis(const MetaVector& m) const {
    if (!finalized_) throw error("WorkloadStats::finalize() not called");
    std::vector<double> x = impute(m);
    for (std::size_t i = 0; i < dim_; ++i) x[i] -= mean_[i];
    // forward-substitute L w = (x - mu); distance is ||w||
    double d2 = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol_[i * dim_ + k] * x[k];
        x[i] = s / chol_[i * dim_ + i];
        d2 += x[i] * x[i];
    }
    return std::sqrt(d2);
}

double WorkloadStats::default_k() const { return std::sqrt(static_cast<double>(dim_) / 0.05); }

WorkloadStats WorkloadStats::restore(std::size_t dim, std::size_t count, std::vector<double> mean,
                                     std::vector<double> cov, std::vector<double> slot_mean,
                                     std::vector<std::size_t> slot_count) {
    WorkloadStats w(dim);
    w.count_ = count;
    w.mean_ = std::move(mean);
    w.slot_mean_ = std::move(slot_mean);
    w.slot_count_ = std::move(slot_count);
    // rebuild the outer-product sum so further add() calls stay consistent; the
    // tiny ridge baked into a serialized covariance is negligible there
    double n = static_cast<double>(count);
    w.sum_outer_.resize(dim * dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            w.sum_outer_[i * dim + j] = (cov[i * dim + j] + w.mean_[i] * w.mean_[j]) * n;
    // the incoming matrix is already regularized: adopt it as-is so a
    // save/load round-trip reproduces mahalanobis() bit for bit
    w.cov_ = std::move(cov);
    w.factorize();
    w.finalized_ = true;
    return w;
}

WorkloadShiftResult check_workload_shift(const WorkloadStats& stats,
                                         const std::vector<MetaVector>& monitored, double k) {
    if (monitored.empty()) throw empty_sample("no monitored queries");
    double n_term = stats.trace_term();
    double bound = n_term / (k * k);
    if (bound >= 1.0)
        throw vacuous_bound("k <= sqrt(N): the Chebyshev bound exceeds 1 and can never fire");
    std::size_t exceed = 0;
    for (const auto& m : monitored)
        if (stats.mahalanobis(m) >= k) ++exceed;
    WorkloadShiftResult r;
    r.bound = bound;
    r.exceedance = static_cast<double>(exceed) / static_cast<double>(monitored.size());
    r.shifted = r.exceedance >= bound;
    return r;
}

DriftMonitor::DriftMonitor(AnswerEcdf train_answers, WorkloadStats train_queries, double alpha,
                           std::size_t window)
    : train_answers_(std::move(train_answers)),
      train_queries_(std::move(train_queries)),
      alpha_(alpha),
      window_(window) {
    if (window_ < 2) throw error("monitor window must be >= 2");
}

std::vector<DriftMonitor::Event> DriftMonitor::observe(const MetaVector& query, double answer) {
    answer_window_.push_back(answer);
    query_window_.push_back(query);
    if (answer_window_.size() > window_) {
        answer_window_.erase(answer_window_.begin());
        query_window_.erase(query_window_.begin());
    }
    std::vector<Event> events;
    if (answer_window_.size() < window_ / 5) return events; // warm-up

    AnswerEcdf monitored(answer_window_);
    DataShiftResult ds = check_data_shift(train_answers_, monitored, alpha_);
    if (ds.shifted) events.push_back({Event::Kind::data, ds.statistic, ds.threshold});

    double k = train_queries_.default_k();
    WorkloadShiftResult ws = check_workload_shift(train_queries_, query_window_, k);
    if (ws.shifted) events.push_back({Event::Kind::workload, ws.exceedance, ws.bound});
    return events;
}

} // namespace mlaqp
