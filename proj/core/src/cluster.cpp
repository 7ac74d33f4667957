#include "mlaqp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mlaqp {

ClusterSet::ClusterSet(std::optional<double> growth_threshold, std::size_t calibration_window)
    : threshold_(growth_threshold), calibration_window_(calibration_window) {
    if (threshold_ && !(*threshold_ > 0.0)) throw error("growth_threshold must be > 0");
}

double ClusterSet::growth_threshold() const {
    if (!threshold_) throw error("growth threshold not calibrated yet");
    return *threshold_;
}

double ClusterSet::distance2(const std::vector<double>& a, const std::vector<double>& b) const {
    double d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool ma = is_missing(a[i]), mb = is_missing(b[i]);
        if (ma && mb) continue;
        double mean = i < slot_mean_.size() ? slot_mean_[i] : 0.0;
        double va = ma ? mean : a[i];
        double vb = mb ? mean : b[i];
        double diff = va - vb;
        d2 += diff * diff;
    }
    return d2;
}

void ClusterSet::update_slot_means(const MetaVector& q) {
    if (slot_mean_.size() < q.width()) {
        slot_mean_.resize(q.width(), 0.0);
        slot_count_.resize(q.width(), 0);
    }
    for (std::size_t i = 0; i < q.width(); ++i) {
        if (is_missing(q.values[i])) continue;
        ++slot_count_[i];
        slot_mean_[i] += (q.values[i] - slot_mean_[i]) / static_cast<double>(slot_count_[i]);
    }
}

void ClusterSet::observe(const MetaVector& q) {
    update_slot_means(q);
    if (!threshold_) {
        pending_.push_back(q);
        if (pending_.size() >= calibration_window_) finalize_calibration();
        return;
    }
    admit(q);
}

void ClusterSet::finalize_calibration() {
    // 2x the median pairwise distance of the buffered queries
    std::vector<double> dists;
    for (std::size_t i = 0; i < pending_.size(); ++i)
        for (std::size_t j = i + 1; j < pending_.size(); ++j)
            dists.push_back(std::sqrt(distance2(pending_[i].values, pending_[j].values)));
    double median = 1.0;
    if (!dists.empty()) {
        std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
        median = dists[dists.size() / 2];
    }
    threshold_ = std::max(2.0 * median, 1e-12);
    for (const auto& q : pending_) admit(q);
    pending_.clear();
}

void ClusterSet::admit(const MetaVector& q) {
    if (reps_.empty()) {
        std::vector<double> rep = q.values;
        for (double& v : rep)
            if (is_missing(v)) v = missing_value(); // keep missing slots as-is
        reps_.push_back(std::move(rep));
        counts_.push_back(1);
        return;
    }
    std::size_t k = assign(q);
    double dist = std::sqrt(distance2(q.values, reps_[k]));
    if (dist > *threshold_) {
        reps_.push_back(q.values);
        counts_.push_back(1);
        return;
    }
    ++counts_[k];
    double step = 1.0 / static_cast<double>(counts_[k]);
    std::vector<double>& w = reps_[k];
    for (std::size_t i = 0; i < w.size() && i < q.width(); ++i) {
        double qv = q.values[i];
        if (is_missing(qv)) continue; // slot absent in the query: leave as-is
        if (is_missing(w[i]))
            w[i] = qv;
        else
            w[i] += step * (qv - w[i]);
    }
}

std::size_t ClusterSet::assign(const MetaVector& q) const {
    if (reps_.empty()) {
        if (!pending_.empty())
            throw empty_cluster_set("cluster set still calibrating; no representatives yet");
        throw empty_cluster_set("no representatives observed");
    }
    std::size_t best = 0;
    double best_d2 = distance2(q.values, reps_[0]);
    for (std::size_t k = 1; k < reps_.size(); ++k) {
        double d2 = distance2(q.values, reps_[k]);
        if (d2 < best_d2) { // strict: ties keep the lowest index
            best_d2 = d2;
            best = k;
        }
    }
    return best;
}

double ClusterSet::quantization_error(const std::vector<MetaVector>& queries) const {
    if (queries.empty()) return 0.0;
    double total = 0;
    for (const auto& q : queries) total += distance2(q.values, reps_[assign(q)]);
    return total / static_cast<double>(queries.size());
}

ClusterSet ClusterSet::restore(std::vector<std::vector<double>> reps,
                               std::vector<std::size_t> counts, double threshold,
                               std::vector<double> slot_mean,
                               std::vector<std::size_t> slot_count) {
    ClusterSet cs(threshold);
    cs.reps_ = std::move(reps);
    cs.counts_ = std::move(counts);
    cs.slot_mean_ = std::move(slot_mean);
    cs.slot_count_ = std::move(slot_count);
    return cs;
}

double ClusterEnsemble::predict(const MetaVector& q) const {
    std::size_t k = clusters.assign(q);
    return local_models[k].predict(q);
}

double cross_validated_mse(const TrainMatrix& data, const GbdtConfig& cfg, std::size_t folds,
                           std::uint64_t seed) {
    std::size_t n = data.n();
    if (n < folds) throw insufficient_data("fewer rows than folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    double sq_sum = 0;
    std::size_t counted = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        TrainMatrix train_part;
        std::vector<std::size_t> test_part;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % folds == f)
                test_part.push_back(order[i]);
            else {
                train_part.rows.push_back(data.rows[order[i]]);
                train_part.targets.push_back(data.targets[order[i]]);
            }
        }
        if (train_part.n() < 2 * cfg.min_samples_leaf) continue;
        GbdtModel model = fit(train_part, cfg, Loss::squared());
        for (std::size_t idx : test_part) {
            double err = data.targets[idx] - model.predict_row(data.rows[idx]);
            sq_sum += err * err;
            ++counted;
        }
    }
    if (counted == 0) throw insufficient_data("no fold had enough training rows");
    return sq_sum / static_cast<double>(counted);
}

ClusterEnsemble fit_local_models(const ClusterSet& cs, const TrainingSet& pairs,
                                 const GbdtConfig& cfg) {
    if (cs.size() == 0) throw empty_cluster_set("fit_local_models over an empty cluster set");

    std::size_t k = cs.size();
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < pairs.pairs.size(); ++i)
        members[cs.assign(pairs.pairs[i].meta)].push_back(i);

    // merge undersized clusters into their nearest representative; a fit
    // needs 2x min_samples_leaf rows
    const std::size_t fit_minimum = 2 * cfg.min_samples_leaf;
    bool any_fittable = false;
    for (const auto& m : members) any_fittable = any_fittable || m.size() >= fit_minimum;
    if (!any_fittable) {
        // degenerate workload: pool everything into the largest cluster
        std::size_t largest = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (members[c].size() > members[largest].size()) largest = c;
        for (std::size_t c = 0; c < k; ++c) {
            if (c == largest) continue;
            members[largest].insert(members[largest].end(), members[c].begin(), members[c].end());
            members[c].clear();
        }
    }
    std::vector<std::size_t> target(k);
    std::iota(target.begin(), target.end(), 0);
    for (std::size_t a = 0; a < k; ++a) {
        if (members[a].size() >= fit_minimum) continue;
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = a;
        for (std::size_t b = 0; b < k; ++b) {
            if (b == a || members[b].size() < fit_minimum) continue;
            double d2 = cs.distance2(cs.representatives()[a], cs.representatives()[b]);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = b;
            }
        }
        target[a] = best;
        if (best != a) {
            members[best].insert(members[best].end(), members[a].begin(), members[a].end());
            members[a].clear();
        }
    }

    ClusterEnsemble ensemble;
    ensemble.clusters = cs;
    ensemble.local_models.resize(k);
    ensemble.generalization_error.assign(k, 0.0);
    std::vector<GbdtModel> fitted(k);
    std::vector<double> errors(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (target[c] != c || members[c].empty()) continue;
        TrainMatrix sub;
        for (std::size_t i : members[c]) {
            sub.rows.push_back(pairs.pairs[i].meta.values);
            sub.targets.push_back(pairs.pairs[i].answer);
        }
        fitted[c] = fit(sub, cfg, Loss::squared());
        // 4/5 of the rows must still clear the fit minimum for CV to run
        errors[c] = sub.n() >= 3 * cfg.min_samples_leaf ? cross_validated_mse(sub, cfg) : 0.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t t = target[c];
        // follow merge chains (a merged cluster may point at another merged one)
        std::size_t guard = 0;
        while (target[t] != t && guard++ < k) t = target[t];
        ensemble.local_models[c] = fitted[t];
        ensemble.generalization_error[c] = errors[t];
    }
    return ensemble;
}

} // namespace mlaqp
