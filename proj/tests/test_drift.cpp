#include <doctest.h>

#include <cmath>
#include <random>

#include "mlaqp/drift.hpp"

using namespace mlaqp;

namespace {

MetaVector vec2(double a, double b) {
    MetaVector m(2);
    m.values[0] = a;
    m.values[1] = b;
    return m;
}

std::vector<double> normal_sample(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mu, sigma);
    std::vector<double> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

} // namespace

TEST_SUITE("drift") {

TEST_CASE("ecdf: sorted insertion and F(y) = #{x <= y} / n") {
    AnswerEcdf f({3.0, 1.0, 2.0});
    CHECK(f.n() == 3);
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(f(2.5) == doctest::Approx(2.0 / 3.0));
    CHECK(f(3.0) == 1.0);
    f.add(1.5);
    CHECK(f(1.6) == doctest::Approx(0.5));
    CHECK(std::is_sorted(f.sample().begin(), f.sample().end()));
}

TEST_CASE("KS statistic: hand-enumerated small samples") {
    // {1,2} vs {1,3}: the sup gap is at y = 2 where F1 = 1 and F2 = 1/2
    CHECK(ks_statistic(AnswerEcdf({1.0, 2.0}), AnswerEcdf({1.0, 3.0})) == doctest::Approx(0.5));
    // identical samples: zero distance
    CHECK(ks_statistic(AnswerEcdf({1.0, 2.0, 5.0}), AnswerEcdf({1.0, 2.0, 5.0})) == 0.0);
    // disjoint supports: full separation
    CHECK(ks_statistic(AnswerEcdf({1.0, 2.0}), AnswerEcdf({10.0, 11.0})) == doctest::Approx(1.0));
    // {1,5,9} vs {2,3}: sup at y in [3,5) where F1 = 1/3 and F2 = 1
    CHECK(ks_statistic(AnswerEcdf({1.0, 5.0, 9.0}), AnswerEcdf({2.0, 3.0})) ==
          doctest::Approx(2.0 / 3.0));
}

TEST_CASE("KS threshold: c(alpha) * sqrt((n+m)/nm) against the closed form") {
    // alpha = 0.05, n = m = 100: sqrt(-ln(0.025)/2) * sqrt(200/10000) = 0.19206...
    CHECK(ks_threshold(0.05, 100, 100) == doctest::Approx(0.19206).epsilon(1e-3));
    double expect = std::sqrt(-std::log(0.005) / 2.0) * std::sqrt(300.0 / 20000.0);
    CHECK(ks_threshold(0.01, 200, 100) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ks_threshold(0.05, 400, 400) < ks_threshold(0.05, 100, 100)); // more data, tighter
    CHECK_THROWS_AS(ks_threshold(0.0, 10, 10), invalid_alpha);
    CHECK_THROWS_AS(ks_threshold(1.0, 10, 10), invalid_alpha);
}

TEST_CASE("data-shift check fires on a mean shift and rarely on the null") {
    AnswerEcdf train(normal_sample(1000, 0.0, 1.0, 5));
    AnswerEcdf shifted(normal_sample(200, 3.0, 1.0, 6));
    auto hit = check_data_shift(train, shifted, 0.05);
    CHECK(hit.shifted);
    CHECK(hit.statistic > hit.threshold);

    int alarms = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        AnswerEcdf tr(normal_sample(400, 0.0, 1.0, 1000 + 2 * t));
        AnswerEcdf same(normal_sample(200, 0.0, 1.0, 1001 + 2 * t));
        if (check_data_shift(tr, same, 0.05).shifted) ++alarms;
    }
    double rate = static_cast<double>(alarms) / trials;
    CHECK(rate < 0.10); // near alpha; the finite-sample test is slightly conservative
    CHECK(rate > 0.005);
}

TEST_CASE("workload stats: mean, covariance and Mahalanobis against the 2x2 closed form") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nx(1.0, 2.0), ny(-3.0, 0.5);
    WorkloadStats stats(2);
    std::vector<MetaVector> pts;
    for (int i = 0; i < 2000; ++i) {
        double x = nx(rng);
        pts.push_back(vec2(x, 0.5 * x + ny(rng))); // correlated slots
        stats.add(pts.back());
    }
    stats.finalize();
    CHECK(stats.count() == 2000);
    CHECK(stats.mean()[0] == doctest::Approx(1.0).epsilon(0.15));
    CHECK(stats.trace_term() == 2.0);

    const auto& c = stats.covariance(); // row-major 2x2
    double det = c[0] * c[3] - c[1] * c[2];
    REQUIRE(det > 0);
    for (const auto& p : pts) {
        double dx = p.values[0] - stats.mean()[0];
        double dy = p.values[1] - stats.mean()[1];
        double q = (c[3] * dx * dx - 2 * c[1] * dx * dy + c[0] * dy * dy) / det;
        CHECK(stats.mahalanobis(p) == doctest::Approx(std::sqrt(q)).epsilon(1e-6));
        if (&p - pts.data() >= 50) break; // a handful is plenty
    }
}

TEST_CASE("workload stats impute missing slots with the training slot mean") {
    WorkloadStats stats(2);
    for (int i = 0; i < 200; ++i)
        stats.add(vec2(10.0 + (i % 5), 20.0 + (i % 7)));
    stats.finalize();
    MetaVector missing_first(2);
    missing_first.values[1] = 20.0 + 3.0;
    MetaVector imputed = vec2(stats.slot_means()[0], 23.0);
    CHECK(stats.mahalanobis(missing_first) == doctest::Approx(stats.mahalanobis(imputed)));
}

TEST_CASE("degenerate covariance is ridged, not singular") {
    WorkloadStats stats(2);
    for (int i = 0; i < 100; ++i) stats.add(vec2(1.0 + i, 1.0 + i)); // perfectly collinear
    CHECK_NOTHROW(stats.finalize());
    CHECK(std::isfinite(stats.mahalanobis(vec2(5.0, 50.0))));
}

TEST_CASE("Chebyshev workload-shift bound") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    WorkloadStats stats(2);
    for (int i = 0; i < 2000; ++i) stats.add(vec2(n(rng), n(rng)));
    stats.finalize();
    double k = stats.default_k();
    CHECK(k == doctest::Approx(std::sqrt(2.0 / 0.05))); // N / k^2 = 0.05

    std::vector<MetaVector> displaced, same;
    for (int i = 0; i < 300; ++i) {
        displaced.push_back(vec2(10.0 + n(rng), 10.0 + n(rng))); // 10 sigma away
        same.push_back(vec2(n(rng), n(rng)));
    }
    auto hit = check_workload_shift(stats, displaced, k);
    CHECK(hit.shifted);
    CHECK(hit.exceedance > hit.bound);
    auto quiet = check_workload_shift(stats, same, k);
    CHECK_FALSE(quiet.shifted);
    CHECK_THROWS_AS(check_workload_shift(stats, same, 1.0), vacuous_bound); // N/k^2 = 2 >= 1
}

TEST_CASE("drift monitor fires on a switched answer stream and stays quiet before") {
    // sliding-window alarms are heavily correlated, so a single stream's alarm
    // count is clumpy; aggregate a few seeds and test the discriminative gap
    int pre_alarms = 0, post_alarms = 0;
    const int seeds = 5, pre_n = 600, post_n = 200;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(123 + seed);
        std::normal_distribution<double> pre(0.0, 1.0), post(3.0, 1.0), qn(0.0, 1.0);
        WorkloadStats stats(2);
        std::vector<double> answers;
        for (int i = 0; i < 1000; ++i) {
            stats.add(vec2(qn(rng), qn(rng)));
            answers.push_back(pre(rng));
        }
        stats.finalize();
        DriftMonitor monitor(AnswerEcdf(answers), stats, 0.05, 200);
        CHECK(monitor.window() == 200);

        for (int i = 0; i < pre_n; ++i)
            for (const auto& ev : monitor.observe(vec2(qn(rng), qn(rng)), pre(rng)))
                if (ev.kind == DriftMonitor::Event::Kind::data) ++pre_alarms;

        int until_fire = -1;
        for (int i = 0; i < post_n; ++i)
            for (const auto& ev : monitor.observe(vec2(qn(rng), qn(rng)), post(rng)))
                if (ev.kind == DriftMonitor::Event::Kind::data && until_fire < 0) until_fire = i;
        for (int i = 0; i < post_n; ++i)
            for (const auto& ev : monitor.observe(vec2(qn(rng), qn(rng)), post(rng)))
                if (ev.kind == DriftMonitor::Event::Kind::data) ++post_alarms;
        CHECK(until_fire >= 0); // fires within 200 post-switch observations
    }
    double pre_rate = static_cast<double>(pre_alarms) / (seeds * pre_n);
    double post_rate = static_cast<double>(post_alarms) / (seeds * post_n);
    CHECK(pre_rate < 0.25);
    CHECK(post_rate > 0.8);
    CHECK(post_rate > pre_rate * 3.0);
}

} // TEST_SUITE
