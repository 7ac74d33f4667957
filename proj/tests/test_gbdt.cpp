#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mlaqp/gbdt.hpp"

using namespace mlaqp;

namespace {

// Exhaustive stump search: every feature, every cut between distinct adjacent
// values, missing bucket tried on both sides. Scores by total SSE of the two
// leaf means, the quantity the variance-gain criterion minimizes.
struct OracleStump {
    bool found = false;
    std::size_t feature = 0;
    double lo = 0.0, hi = 0.0;  // any threshold in (lo, hi] gives this partition
    bool default_left = true;
    double left_mean = 0.0, right_mean = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

double sse_around_mean(const std::vector<double>& ys) {
    double mean = 0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    double s = 0;
    for (double y : ys) s += (y - mean) * (y - mean);
    return s;
}

OracleStump oracle_best_stump(const TrainMatrix& data, std::size_t min_leaf) {
    OracleStump best;
    for (std::size_t f = 0; f < data.width(); ++f) {
        std::vector<std::pair<double, double>> present; // (value, target)
        std::vector<double> miss;
        for (std::size_t r = 0; r < data.n(); ++r) {
            double v = data.rows[r][f];
            if (is_missing(v))
                miss.push_back(data.targets[r]);
            else
                present.emplace_back(v, data.targets[r]);
        }
        std::sort(present.begin(), present.end());
        for (std::size_t cut = 1; cut < present.size(); ++cut) {
            if (present[cut].first == present[cut - 1].first) continue;
            std::vector<double> left, right;
            for (std::size_t i = 0; i < present.size(); ++i)
                (i < cut ? left : right).push_back(present[i].second);
            for (int miss_left = 1; miss_left >= 0; --miss_left) {
                std::vector<double> l = left, r = right;
                (miss_left ? l : r).insert((miss_left ? l : r).end(), miss.begin(), miss.end());
                if (l.size() < min_leaf || r.size() < min_leaf) continue;
                double sse = sse_around_mean(l) + sse_around_mean(r);
                if (sse < best.sse - 1e-12) {
                    best.found = true;
                    best.feature = f;
                    best.lo = present[cut - 1].first;
                    best.hi = present[cut].first;
                    best.default_left = miss_left != 0;
                    double lm = 0, rm = 0;
                    for (double y : l) lm += y;
                    for (double y : r) rm += y;
                    best.left_mean = lm / static_cast<double>(l.size());
                    best.right_mean = rm / static_cast<double>(r.size());
                    best.sse = sse;
                }
            }
        }
    }
    return best;
}

TrainMatrix random_matrix(std::mt19937_64& rng, std::size_t max_rows, bool with_missing) {
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    TrainMatrix m;
    std::size_t n = 5 + rng() % (max_rows - 4);
    std::size_t width = 1 + rng() % 4;
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(width);
        for (auto& v : row)
            v = (with_missing && rng() % 5 == 0) ? missing_value() : u(rng);
        m.rows.push_back(std::move(row));
        m.targets.push_back(u(rng));
    }
    return m;
}

GbdtConfig stump_config() {
    GbdtConfig cfg;
    cfg.rounds = 1;
    cfg.learning_rate = 1.0;
    cfg.max_depth = 1;
    cfg.min_samples_leaf = 1;
    cfg.early_stopping_rounds = std::nullopt;
    return cfg;
}

double pinball_mean(const std::vector<double>& ys, double c, double t) {
    double s = 0;
    for (double y : ys) s += Loss::pinball(t)(y, c);
    return s / static_cast<double>(ys.size());
}

} // namespace

TEST_SUITE("gbdt") {

TEST_CASE("one-round depth-1 model equals the exhaustive best stump") {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        TrainMatrix data = random_matrix(rng, 50, trial % 2 == 1);
        OracleStump want = oracle_best_stump(data, 1);
        if (!want.found) continue;
        GbdtModel model = fit(data, stump_config(), Loss::squared());
        if (model.trees.empty()) continue; // gain under the numeric floor: no split taken
        ++checked;
        const RegressionTree& tree = model.trees[0];
        REQUIRE(tree.nodes.size() == 3);
        const auto& root = tree.nodes[0];
        REQUIRE_FALSE(root.leaf);
        // with continuous random targets the optimum partition is a.s. unique
        CHECK(root.split_feature == want.feature);
        CHECK(root.split_threshold > want.lo);
        CHECK(root.split_threshold <= want.hi);
        CHECK(root.default_left == want.default_left);
        // predict = base + 1.0 * leaf(mean residual) = leaf partition mean
        double left_pred = model.base_score + tree.nodes[root.left].value;
        double right_pred = model.base_score + tree.nodes[root.right].value;
        CHECK(left_pred == doctest::Approx(want.left_mean).epsilon(1e-12));
        CHECK(right_pred == doctest::Approx(want.right_mean).epsilon(1e-12));
    }
    CHECK(checked >= 60); // the oracle comparison must actually exercise many instances
}

TEST_CASE("find_best_split tie-breaks: lowest feature, lowest threshold, missing-left") {
    TrainMatrix data;
    // two identical features: both would give the same split, feature 0 must win
    data.rows = {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}, {4.0, 4.0}};
    data.targets = {0.0, 0.0, 10.0, 10.0};
    std::vector<std::size_t> idx = {0, 1, 2, 3};
    auto s0 = find_best_split(data, idx, data.targets, 0, 1);
    auto s1 = find_best_split(data, idx, data.targets, 1, 1);
    REQUIRE(s0.has_value());
    REQUIRE(s1.has_value());
    CHECK(s0->gain == s1->gain);
    CHECK(s0->threshold == 2.5);

    // a missing row whose routing does not change the gain defaults left
    TrainMatrix md;
    md.rows = {{1.0}, {2.0}, {missing_value()}};
    md.targets = {0.0, 10.0, 5.0};
    std::vector<std::size_t> midx = {0, 1, 2};
    auto ms = find_best_split(md, midx, md.targets, 0, 1);
    REQUIRE(ms.has_value());
    CHECK(ms->threshold == 1.5);
}

TEST_CASE("find_best_split returns nullopt when no valid cut exists") {
    TrainMatrix data;
    data.rows = {{1.0}, {1.0}, {1.0}};
    data.targets = {0.0, 5.0, 9.0};
    std::vector<std::size_t> idx = {0, 1, 2};
    CHECK_FALSE(find_best_split(data, idx, data.targets, 0, 1).has_value()); // constant feature
    TrainMatrix tiny;
    tiny.rows = {{missing_value()}, {2.0}};
    tiny.targets = {1.0, 2.0};
    std::vector<std::size_t> tidx = {0, 1};
    CHECK_FALSE(find_best_split(tiny, tidx, tiny.targets, 0, 1).has_value()); // < 2 present
}

TEST_CASE("pinball base score matches the grid-search optimal constant") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (double t : {0.05, 0.5, 0.95}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> ys(40);
            for (auto& y : ys) y = u(rng);
            double got = empirical_quantile(ys, t);
            // some sample point minimizes mean pinball loss; find it by search
            double best = ys[0], best_loss = pinball_mean(ys, ys[0], t);
            for (double c : ys) {
                double l = pinball_mean(ys, c, t);
                if (l < best_loss - 1e-12) {
                    best = c;
                    best_loss = l;
                }
            }
            CHECK(pinball_mean(ys, got, t) <= best_loss + 1e-9);
        }
    }
}

TEST_CASE("fitting reduces training error and is deterministic under one seed") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainMatrix data;
    for (int r = 0; r < 400; ++r) {
        double x0 = u(rng), x1 = u(rng);
        data.rows.push_back({x0, x1});
        data.targets.push_back(3.0 * x0 - 2.0 * x1 + 0.05 * u(rng));
    }
    GbdtConfig cfg;
    cfg.rounds = 150;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 5;
    GbdtModel a = fit(data, cfg, Loss::squared());
    GbdtModel b = fit(data, cfg, Loss::squared());
    REQUIRE(a.trees.size() == b.trees.size());
    double mse_model = 0, mse_const = 0;
    for (std::size_t r = 0; r < data.n(); ++r) {
        double pa = a.predict_row(data.rows[r]);
        CHECK(pa == b.predict_row(data.rows[r])); // bit-identical across refits
        mse_model += (data.targets[r] - pa) * (data.targets[r] - pa);
        mse_const += (data.targets[r] - a.base_score) * (data.targets[r] - a.base_score);
    }
    CHECK(mse_model < 0.05 * mse_const);
}

TEST_CASE("early stopping truncates to the best validation round") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainMatrix data;
    for (int r = 0; r < 300; ++r) {
        double x = u(rng);
        data.rows.push_back({x});
        data.targets.push_back(x + noise(rng)); // mostly noise: overfitting territory
    }
    GbdtConfig with_stop;
    with_stop.rounds = 2000;
    with_stop.max_depth = 2;
    with_stop.min_samples_leaf = 5;
    with_stop.early_stopping_rounds = 20;
    GbdtModel stopped = fit(data, with_stop, Loss::squared());
    CHECK(stopped.trees.size() < 2000);
}

TEST_CASE("missing feature values route along the stored default direction") {
    TrainMatrix data;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int r = 0; r < 200; ++r) {
        bool miss = r % 4 == 0;
        double x = u(rng);
        data.rows.push_back({miss ? missing_value() : x});
        data.targets.push_back(miss ? 50.0 : (x < 0.5 ? 0.0 : 10.0));
    }
    GbdtConfig cfg;
    cfg.rounds = 50;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 5;
    cfg.early_stopping_rounds = std::nullopt;
    GbdtModel m = fit(data, cfg, Loss::squared());
    CHECK(m.predict_row({missing_value()}) == doctest::Approx(50.0).epsilon(0.05));
    CHECK(m.predict_row({0.2}) == doctest::Approx(0.0).epsilon(0.1).scale(10.0));
    CHECK(m.predict_row({0.8}) == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("degenerate and invalid inputs") {
    TrainMatrix constant;
    for (int r = 0; r < 50; ++r) {
        constant.rows.push_back({static_cast<double>(r)});
        constant.targets.push_back(7.0);
    }
    GbdtConfig cfg;
    cfg.min_samples_leaf = 2;
    GbdtModel m = fit(constant, cfg, Loss::squared());
    CHECK(m.trees.empty()); // constant target: base score only
    CHECK(m.predict_row({3.0}) == 7.0);

    TrainMatrix tiny;
    tiny.rows = {{1.0}};
    tiny.targets = {1.0};
    CHECK_THROWS_AS(fit(tiny, cfg, Loss::squared()), insufficient_data);
    CHECK_THROWS_AS(m.predict_row({1.0, 2.0}), width_mismatch);
    CHECK_THROWS_AS(Loss::pinball(0.0), error);
    CHECK_THROWS_AS(Loss::pinball(1.0), error);
}

TEST_CASE("pinball-loss trees bend predictions toward the requested quantile") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainMatrix data;
    for (int r = 0; r < 600; ++r) {
        double x = u(rng);
        data.rows.push_back({x});
        data.targets.push_back(10.0 * x + 5.0 * u(rng)); // U(10x, 10x+5)
    }
    GbdtConfig cfg;
    cfg.rounds = 800;
    cfg.learning_rate = 0.05;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 20;
    cfg.early_stopping_rounds = std::nullopt;
    GbdtModel lo = fit(data, cfg, Loss::pinball(0.1));
    GbdtModel hi = fit(data, cfg, Loss::pinball(0.9));
    // empirical check: the two conditional quantile estimates straddle the middle
    int ordered = 0;
    for (double x = 0.1; x < 0.95; x += 0.1)
        if (lo.predict_row({x}) < hi.predict_row({x})) ++ordered;
    CHECK(ordered >= 8);
    double below_lo = 0, below_hi = 0;
    for (std::size_t r = 0; r < data.n(); ++r) {
        if (data.targets[r] <= lo.predict_row(data.rows[r])) ++below_lo;
        if (data.targets[r] <= hi.predict_row(data.rows[r])) ++below_hi;
    }
    CHECK(below_lo / static_cast<double>(data.n()) < 0.35);
    CHECK(below_hi / static_cast<double>(data.n()) > 0.65);
}

TEST_CASE("empirical_quantile lower order statistic oracle") {
    std::vector<double> v = {5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(empirical_quantile(v, 0.2) == 1.0);  // ceil(0.2*5) = 1st
    CHECK(empirical_quantile(v, 0.5) == 3.0);  // ceil(2.5) = 3rd
    CHECK(empirical_quantile(v, 0.6) == 3.0);  // ceil(3.0) = 3rd exactly
    CHECK(empirical_quantile(v, 0.61) == 4.0);
    CHECK(empirical_quantile(v, 0.95) == 5.0);
    CHECK_THROWS_AS(empirical_quantile({}, 0.5), error);
}

} // TEST_SUITE
