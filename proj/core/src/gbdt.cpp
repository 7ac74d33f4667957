#include "mlaqp/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mlaqp {

Loss Loss::pinball(double t) {
    if (!(t > 0.0 && t < 1.0)) throw error("pinball level must lie strictly inside (0,1)");
    return {Kind::pinball, t};
}

double Loss::operator()(double y, double yhat) const {
    double diff = y - yhat;
    if (kind == Kind::squared) return diff * diff;
    return diff > 0 ? t * diff : (1.0 - t) * (-diff);
}

GbdtConfig GbdtConfig::point_defaults() { return GbdtConfig{}; }

GbdtConfig GbdtConfig::quantile_defaults() {
    GbdtConfig cfg;
    cfg.rounds = 1500;
    cfg.learning_rate = 0.001;
    cfg.max_depth = 3;
    cfg.early_stopping_rounds = std::nullopt;
    return cfg;
}

void GbdtConfig::validate() const {
    if (rounds < 1) throw error("rounds must be >= 1");
    if (max_depth < 1) throw error("max_depth must be >= 1");
    if (!(learning_rate > 0.0)) throw error("learning_rate must be > 0");
    if (min_samples_leaf < 1) throw error("min_samples_leaf must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw error("validation_fraction must lie inside (0,1)");
}

double RegressionTree::predict(const std::vector<double>& x) const {
    std::size_t i = 0;
    for (;;) {
        const Node& n = nodes[i];
        if (n.leaf) return n.value;
        double v = x[n.split_feature];
        bool go_left = is_missing(v) ? n.default_left : v <= n.split_threshold;
        i = static_cast<std::size_t>(go_left ? n.left : n.right);
    }
}

std::size_t RegressionTree::leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes)
        if (n.leaf) ++c;
    return c;
}

double GbdtModel::predict_row(const std::vector<double>& x) const {
    if (x.size() != feature_width)
        throw width_mismatch("input width " + std::to_string(x.size()) + " != model width " +
                             std::to_string(feature_width));
    double y = base_score;
    for (const auto& tree : trees) y += learning_rate * tree.predict(x);
    return y;
}

double GbdtModel::predict(const MetaVector& m) const { return predict_row(m.values); }

TrainMatrix to_matrix(const TrainingSet& train) {
    TrainMatrix mat;
    mat.rows.reserve(train.pairs.size());
    mat.targets.reserve(train.pairs.size());
    for (const auto& p : train.pairs) {
        mat.rows.push_back(p.meta.values);
        mat.targets.push_back(p.answer);
    }
    return mat;
}

double empirical_quantile(std::vector<double> values, double t) {
    if (values.empty()) throw error("quantile of empty sample");
    std::sort(values.begin(), values.end());
    double n = static_cast<double>(values.size());
    auto k = static_cast<std::size_t>(std::ceil(t * n - 1e-9));
    if (k < 1) k = 1;
    if (k > values.size()) k = values.size();
    return values[k - 1];
}

namespace {

constexpr double kMinGain = 1e-10;

struct Candidate {
    double gain = 0.0;
    double threshold = 0.0;
    bool default_left = true;
    bool valid = false;
};

// gain of a (left, right) gradient partition relative to the unsplit node
inline double split_gain(double sl, double nl, double sr, double nr, double parent_score) {
    return sl * sl / nl + sr * sr / nr - parent_score;
}

inline void consider(Candidate& best, double threshold, double lp_cnt, double lp_sum,
                     double rp_cnt, double rp_sum, double miss_cnt, double miss_sum,
                     double parent_score, std::size_t min_leaf) {
    double ml = static_cast<double>(min_leaf);
    // missing bucket left, then right; strict improvement keeps the tie order
    double nl = lp_cnt + miss_cnt, nr = rp_cnt;
    if (nl >= ml && nr >= ml) {
        double g = split_gain(lp_sum + miss_sum, nl, rp_sum, nr, parent_score);
        if (!best.valid || g > best.gain) best = {g, threshold, true, true};
    }
    nl = lp_cnt;
    nr = rp_cnt + miss_cnt;
    if (nl >= ml && nr >= ml) {
        double g = split_gain(lp_sum, nl, rp_sum + miss_sum, nr, parent_score);
        if (!best.valid || g > best.gain) best = {g, threshold, false, true};
    }
}

} // namespace

std::optional<SplitResult> find_best_split(const TrainMatrix& data,
                                           const std::vector<std::size_t>& row_idx,
                                           const std::vector<double>& gradients,
                                           std::size_t feature,
                                           std::size_t min_samples_leaf) {
    std::vector<std::pair<double, double>> present; // (value, gradient)
    double miss_cnt = 0, miss_sum = 0, total_sum = 0;
    for (std::size_t i = 0; i < row_idx.size(); ++i) {
        double v = data.rows[row_idx[i]][feature];
        double g = gradients[i];
        total_sum += g;
        if (is_missing(v)) {
            miss_cnt += 1;
            miss_sum += g;
        } else {
            present.emplace_back(v, g);
        }
    }
    if (present.size() < 2) return std::nullopt;
    std::sort(present.begin(), present.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double n = static_cast<double>(row_idx.size());
    double parent_score = total_sum * total_sum / n;
    double tot_p_cnt = static_cast<double>(present.size());
    double tot_p_sum = 0;
    for (const auto& [v, g] : present) tot_p_sum += g;

    Candidate best;
    double run_cnt = 0, run_sum = 0;
    for (std::size_t i = 0; i < present.size(); ++i) {
        if (i > 0 && present[i].first > present[i - 1].first) {
            double mid = present[i - 1].first + 0.5 * (present[i].first - present[i - 1].first);
            consider(best, mid, run_cnt, run_sum, tot_p_cnt - run_cnt, tot_p_sum - run_sum,
                     miss_cnt, miss_sum, parent_score, min_samples_leaf);
        }
        run_cnt += 1;
        run_sum += present[i].second;
    }
    double gain_floor = kMinGain * std::max(1.0, std::abs(parent_score));
    if (!best.valid || best.gain <= gain_floor) return std::nullopt;
    return SplitResult{feature, best.threshold, best.default_left, best.gain};
}

namespace {

// Layer-wise exact tree builder over a presorted feature index. Split search
// is a single pass per feature per level; the presorted order is computed
// once per fit and reused across boosting rounds.
struct TreeBuilder {
    const TrainMatrix& data;
    const std::vector<std::size_t>& train_rows; // data row per position
    const std::vector<std::vector<std::uint32_t>>& sorted_pos; // per feature, present positions by value
    std::size_t width;
    const GbdtConfig& cfg;

    std::vector<std::int32_t> node_of_pos;

    struct LevelNode {
        std::int32_t id;
        double count;
        double grad_sum;
        Candidate best;
        std::size_t best_feature = 0;
        // per-feature scratch
        double tot_p_cnt = 0, tot_p_sum = 0;
        double run_cnt = 0, run_sum = 0;
        double prev_value = 0;
        bool has_prev = false;
    };

    double value_at(std::size_t pos, std::size_t f) const {
        return data.rows[train_rows[pos]][f];
    }

    // leaf_value(positions) -> fitted leaf output
    template <typename LeafFn>
    RegressionTree build(const std::vector<double>& gradients, LeafFn&& leaf_value) {
        std::size_t m = train_rows.size();
        RegressionTree tree;
        tree.nodes.emplace_back();
        node_of_pos.assign(m, 0);

        std::vector<LevelNode> level(1);
        level[0].id = 0;
        level[0].count = static_cast<double>(m);
        level[0].grad_sum = std::accumulate(gradients.begin(), gradients.end(), 0.0);

        for (std::size_t depth = 0; depth < cfg.max_depth && !level.empty(); ++depth) {
            std::vector<std::int32_t> level_index(tree.nodes.size(), -1);
            for (std::size_t li = 0; li < level.size(); ++li) level_index[level[li].id] = static_cast<std::int32_t>(li);

            for (std::size_t f = 0; f < width; ++f) {
                for (auto& ln : level) {
                    ln.tot_p_cnt = ln.tot_p_sum = 0;
                    ln.run_cnt = ln.run_sum = 0;
                    ln.has_prev = false;
                }
                // pass 1: per-node present totals for this feature
                for (std::uint32_t pos : sorted_pos[f]) {
                    std::int32_t li = level_index[node_of_pos[pos]];
                    if (li < 0) continue;
                    level[li].tot_p_cnt += 1;
                    level[li].tot_p_sum += gradients[pos];
                }
                // pass 2: scan candidates in value order
                for (std::uint32_t pos : sorted_pos[f]) {
                    std::int32_t li = level_index[node_of_pos[pos]];
                    if (li < 0) continue;
                    LevelNode& ln = level[li];
                    double v = value_at(pos, f);
                    if (ln.has_prev && v > ln.prev_value) {
                        double mid = ln.prev_value + 0.5 * (v - ln.prev_value);
                        double parent_score = ln.grad_sum * ln.grad_sum / ln.count;
                        double prev_gain = ln.best.valid
                            ? ln.best.gain
                            : -std::numeric_limits<double>::infinity();
                        double miss_cnt = ln.count - ln.tot_p_cnt;
                        // an empty missing bucket must carry an exactly-zero
                        // gradient: grad_sum - tot_p_sum differs in the last
                        // ulp (different accumulation order) and would bias
                        // the missing-left-vs-right tie
                        double miss_sum = miss_cnt == 0.0 ? 0.0 : ln.grad_sum - ln.tot_p_sum;
                        consider(ln.best, mid, ln.run_cnt, ln.run_sum,
                                 ln.tot_p_cnt - ln.run_cnt, ln.tot_p_sum - ln.run_sum,
                                 miss_cnt, miss_sum,
                                 parent_score, cfg.min_samples_leaf);
                        if (ln.best.valid && ln.best.gain > prev_gain) ln.best_feature = f;
                    }
                    ln.run_cnt += 1;
                    ln.run_sum += gradients[pos];
                    ln.prev_value = v;
                    ln.has_prev = true;
                }
            }

            // materialize splits and push children
            std::vector<LevelNode> next;
            for (auto& ln : level) {
                double gain_floor =
                    kMinGain * std::max(1.0, std::abs(ln.grad_sum * ln.grad_sum / ln.count));
                if (!ln.best.valid || ln.best.gain <= gain_floor) continue;
                auto left_id = static_cast<std::int32_t>(tree.nodes.size());
                auto right_id = left_id + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                RegressionTree::Node& node = tree.nodes[ln.id];
                node.leaf = false;
                node.split_feature = ln.best_feature;
                node.split_threshold = ln.best.threshold;
                node.default_left = ln.best.default_left;
                node.left = left_id;
                node.right = right_id;
                LevelNode lc, rc;
                lc.id = left_id;
                rc.id = right_id;
                lc.count = rc.count = 0;
                lc.grad_sum = rc.grad_sum = 0;
                next.push_back(lc);
                next.push_back(rc);
            }
            if (next.empty()) break;

            // reassign rows of split nodes to their children
            std::vector<std::int32_t> next_index(tree.nodes.size(), -1);
            for (std::size_t li = 0; li < next.size(); ++li) next_index[next[li].id] = static_cast<std::int32_t>(li);
            for (std::size_t pos = 0; pos < m; ++pos) {
                const RegressionTree::Node& node = tree.nodes[node_of_pos[pos]];
                if (node.leaf) continue;
                double v = value_at(pos, node.split_feature);
                bool go_left = is_missing(v) ? node.default_left : v <= node.split_threshold;
                std::int32_t child = go_left ? node.left : node.right;
                node_of_pos[pos] = child;
                LevelNode& ln = next[next_index[child]];
                ln.count += 1;
                ln.grad_sum += gradients[pos];
            }
            level = std::move(next);
        }

        // fit leaf values
        std::vector<std::vector<std::size_t>> leaf_rows(tree.nodes.size());
        for (std::size_t pos = 0; pos < m; ++pos) leaf_rows[node_of_pos[pos]].push_back(pos);
        for (std::size_t i = 0; i < tree.nodes.size(); ++i)
            if (tree.nodes[i].leaf)
                tree.nodes[i].value = leaf_rows[i].empty() ? 0.0 : leaf_value(leaf_rows[i]);
        return tree;
    }
};

} // namespace

GbdtModel fit(const TrainMatrix& data, const GbdtConfig& cfg, const Loss& loss) {
    cfg.validate();
    std::size_t n = data.n();
    if (n < 2 * cfg.min_samples_leaf)
        throw insufficient_data("need at least " + std::to_string(2 * cfg.min_samples_leaf) +
                                " rows, got " + std::to_string(n));
    for (double y : data.targets)
        if (!std::isfinite(y)) throw error("non-finite training target");
    for (const auto& row : data.rows)
        if (row.size() != data.width()) throw width_mismatch("ragged training matrix");

    GbdtModel model;
    model.loss = loss;
    model.learning_rate = cfg.learning_rate;
    model.feature_width = data.width();

    const bool squared = loss.kind == Loss::Kind::squared;
    model.base_score = squared
        ? std::accumulate(data.targets.begin(), data.targets.end(), 0.0) / static_cast<double>(n)
        : empirical_quantile(data.targets, loss.t);

    auto [mn, mx] = std::minmax_element(data.targets.begin(), data.targets.end());
    if (*mn == *mx) return model; // degenerate constant target: base score only

    // validation split for early stopping
    std::vector<std::size_t> train_rows(n), val_rows;
    std::iota(train_rows.begin(), train_rows.end(), 0);
    if (cfg.early_stopping_rounds) {
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(train_rows.begin(), train_rows.end(), rng);
        auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
        if (n_val >= 1 && n - n_val >= 2 * cfg.min_samples_leaf) {
            val_rows.assign(train_rows.end() - static_cast<std::ptrdiff_t>(n_val), train_rows.end());
            train_rows.resize(n - n_val);
        } else {
            std::iota(train_rows.begin(), train_rows.end(), 0); // too small: no holdout
        }
        std::sort(train_rows.begin(), train_rows.end());
    }
    std::size_t m = train_rows.size();

    // presorted present positions per feature, reused across rounds
    std::vector<std::vector<std::uint32_t>> sorted_pos(data.width());
    for (std::size_t f = 0; f < data.width(); ++f) {
        auto& sp = sorted_pos[f];
        for (std::uint32_t pos = 0; pos < m; ++pos)
            if (!is_missing(data.rows[train_rows[pos]][f])) sp.push_back(pos);
        std::stable_sort(sp.begin(), sp.end(), [&](std::uint32_t a, std::uint32_t b) {
            return data.rows[train_rows[a]][f] < data.rows[train_rows[b]][f];
        });
    }

    std::vector<double> pred(m, model.base_score);
    std::vector<double> val_pred(val_rows.size(), model.base_score);
    std::vector<double> gradients(m), residuals(m);

    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_round = 0, stall = 0;

    TreeBuilder builder{data, train_rows, sorted_pos, data.width(), cfg, {}};

    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        for (std::size_t pos = 0; pos < m; ++pos) {
            double y = data.targets[train_rows[pos]];
            residuals[pos] = y - pred[pos];
            if (squared) {
                gradients[pos] = residuals[pos];
            } else {
                // negative pinball gradient; subgradient t at the kink
                gradients[pos] = residuals[pos] >= 0 ? loss.t : -(1.0 - loss.t);
            }
        }

        RegressionTree tree;
        if (squared) {
            tree = builder.build(gradients, [&](const std::vector<std::size_t>& rows) {
                double s = 0;
                for (std::size_t pos : rows) s += gradients[pos];
                return s / static_cast<double>(rows.size());
            });
        } else {
            // structure from the gradient, leaf output from the leaf-local
            // residual quantile (gradient-only leaves converge too slowly)
            tree = builder.build(gradients, [&](const std::vector<std::size_t>& rows) {
                std::vector<double> r;
                r.reserve(rows.size());
                for (std::size_t pos : rows) r.push_back(residuals[pos]);
                return empirical_quantile(std::move(r), loss.t);
            });
        }

        if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-12) break;

        for (std::size_t pos = 0; pos < m; ++pos)
            pred[pos] += cfg.learning_rate * tree.predict(data.rows[train_rows[pos]]);
        model.trees.push_back(std::move(tree));

        if (!val_rows.empty()) {
            const RegressionTree& t = model.trees.back();
            double vloss = 0;
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                val_pred[i] += cfg.learning_rate * t.predict(data.rows[val_rows[i]]);
                vloss += loss(data.targets[val_rows[i]], val_pred[i]);
            }
            vloss /= static_cast<double>(val_rows.size());
            if (vloss < best_val - 1e-12) {
                best_val = vloss;
                best_round = model.trees.size();
                stall = 0;
            } else if (++stall >= *cfg.early_stopping_rounds) {
                model.trees.resize(best_round);
                break;
            }
        }
    }
    return model;
}

GbdtModel fit(const TrainingSet& train, const GbdtConfig& cfg, const Loss& loss) {
    return fit(to_matrix(train), cfg, loss);
}

} // namespace mlaqp
