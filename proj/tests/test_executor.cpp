#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "mlaqp/executor.hpp"
#include "mlaqp/parser.hpp"

using namespace mlaqp;

namespace {

DatasetSchema mixed_schema() {
    DatasetSchema s;
    s.name = "t";
    s.attributes = {{"a1", AttrKind::numeric, {}},
                    {"a2", AttrKind::numeric, {}},
                    {"a3", AttrKind::numeric, {}},
                    {"city", AttrKind::categorical, 4}};
    return s;
}

ColumnarDataset random_dataset(std::size_t rows, std::uint64_t seed) {
    ColumnarDataset ds;
    ds.schema = mixed_schema();
    ds.columns.resize(4);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    const std::vector<std::string> cities = {"lyon", "oslo", "pisa", "riga"};
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < 3; ++c) ds.columns[c].nums.push_back(u(rng));
        ds.columns[3].strs.push_back(cities[rng() % cities.size()]);
    }
    return ds;
}

// row-at-a-time reference executor, deliberately independent of the columnar one
AggregateAnswer naive_execute(const ColumnarDataset& ds, const ParsedQuery& q) {
    AggregateAnswer out;
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        bool pass = true;
        for (const auto& p : q.predicates) {
            double v = ds.columns[*ds.schema.index_of(p.attribute)].nums[r];
            if (p.lb && v < *p.lb) pass = false;
            if (p.ub && v > *p.ub) pass = false;
        }
        for (const auto& [attr, value] : q.categorical_equalities)
            if (ds.columns[*ds.schema.index_of(attr)].strs[r] != value) pass = false;
        for (const auto& [attr, pattern] : q.like_patterns)
            if (!like_match(ds.columns[*ds.schema.index_of(attr)].strs[r], pattern)) pass = false;
        if (pass) kept.push_back(r);
    }
    out.empty_selection = kept.empty();
    for (const auto& af : q.aggregates) {
        if (af.function == AggFn::count) {
            out.values[af.key()] = static_cast<double>(kept.size());
            continue;
        }
        const auto& col = ds.columns[*ds.schema.index_of(*af.target_attribute)].nums;
        if (af.function == AggFn::sum) {
            double s = 0;
            for (auto r : kept) s += col[r];
            out.values[af.key()] = s;
            continue;
        }
        if (kept.empty()) continue; // AVG/MIN/MAX undefined on empty selections
        double s = 0, mn = col[kept[0]], mx = col[kept[0]];
        for (auto r : kept) {
            s += col[r];
            mn = std::min(mn, col[r]);
            mx = std::max(mx, col[r]);
        }
        if (af.function == AggFn::avg) out.values[af.key()] = s / static_cast<double>(kept.size());
        if (af.function == AggFn::min) out.values[af.key()] = mn;
        if (af.function == AggFn::max) out.values[af.key()] = mx;
    }
    return out;
}

std::string random_sql(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::string sql = "SELECT COUNT(*), SUM(a1), AVG(a1), MIN(a2), MAX(a2) FROM t WHERE ";
    std::vector<std::string> conds;
    std::size_t n_conds = 1 + rng() % 3;
    // distinct attributes per query: repeats could produce contradictory bounds
    std::vector<const char*> attrs = {"a1", "a2", "a3"};
    std::shuffle(attrs.begin(), attrs.end(), rng);
    for (std::size_t i = 0; i < n_conds; ++i) {
        const char* a = attrs[i];
        double lo = u(rng), hi = u(rng);
        if (lo > hi) std::swap(lo, hi);
        switch (rng() % 3) {
            case 0:
                conds.push_back(std::string(a) + " >= " + std::to_string(lo));
                break;
            case 1:
                conds.push_back(std::string(a) + " <= " + std::to_string(hi));
                break;
            default:
                conds.push_back(std::string(a) + " BETWEEN " + std::to_string(lo) + " AND " +
                                std::to_string(hi));
        }
    }
    if (rng() % 4 == 0) conds.push_back("city = 'oslo'");
    sql += conds[0];
    for (std::size_t i = 1; i < conds.size(); ++i) sql += " AND " + conds[i];
    return sql;
}

} // namespace

TEST_SUITE("executor") {

TEST_CASE("columnar executor matches the naive row-loop oracle on random queries") {
    ColumnarDataset ds = random_dataset(2000, 5);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 300; ++trial) {
        ParsedQuery q = parse(random_sql(rng), ds.schema);
        AggregateAnswer got = execute_aggregate(ds, q);
        AggregateAnswer want = naive_execute(ds, q);
        REQUIRE(got.empty_selection == want.empty_selection);
        REQUIRE(got.values.size() == want.values.size());
        for (const auto& [key, v] : want.values) {
            REQUIRE(got.values.count(key) == 1);
            CHECK(got.values.at(key) == doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("empty selection: COUNT and SUM are zero, the others are omitted") {
    ColumnarDataset ds = random_dataset(100, 7);
    auto q = parse("SELECT COUNT(*), SUM(a1), AVG(a1), MIN(a1), MAX(a1) FROM t WHERE a1 >= 1000",
                   ds.schema);
    AggregateAnswer ans = execute_aggregate(ds, q);
    CHECK(ans.empty_selection);
    CHECK(ans.values.at("COUNT(*)") == 0.0);
    CHECK(ans.values.at("SUM(a1)") == 0.0);
    CHECK(ans.values.count("AVG(a1)") == 0);
    CHECK(ans.values.count("MIN(a1)") == 0);
    CHECK(ans.values.count("MAX(a1)") == 0);
}

TEST_CASE("predicate bounds are inclusive on both ends") {
    ColumnarDataset ds;
    ds.schema.name = "t";
    ds.schema.attributes = {{"a1", AttrKind::numeric, {}}};
    ds.columns.resize(1);
    ds.columns[0].nums = {1.0, 2.0, 3.0, 4.0};
    auto q = parse("SELECT COUNT(*) FROM t WHERE a1 BETWEEN 2 AND 3", ds.schema);
    CHECK(execute_aggregate(ds, q).values.at("COUNT(*)") == 2.0);
}

TEST_CASE("grouped execution agrees with filtering each group explicitly") {
    ColumnarDataset ds = random_dataset(1500, 11);
    auto grouped = parse("SELECT COUNT(*), AVG(a1) FROM t WHERE a2 >= 30 GROUP BY city", ds.schema);
    auto result = execute_group_by(ds, grouped);
    auto tuples = select_distinct(ds, {"city"});
    std::size_t nonempty = 0;
    for (const auto& tuple : tuples) {
        auto single = parse("SELECT COUNT(*), AVG(a1) FROM t WHERE a2 >= 30 AND city = '" +
                                tuple[0] + "'",
                            ds.schema);
        AggregateAnswer want = execute_aggregate(ds, single);
        if (want.values.at("COUNT(*)") == 0.0) {
            CHECK(result.count(tuple) == 0); // empty groups do not appear in GROUP BY output
            continue;
        }
        ++nonempty;
        REQUIRE(result.count(tuple) == 1);
        const AggregateAnswer& got = result.at(tuple);
        CHECK(got.values.at("COUNT(*)") == want.values.at("COUNT(*)"));
        CHECK(got.values.at("AVG(a1)") == doctest::Approx(want.values.at("AVG(a1)")).epsilon(1e-12));
    }
    CHECK(result.size() == nonempty);
}

TEST_CASE("select_distinct returns sorted unique tuples") {
    ColumnarDataset ds = random_dataset(200, 3);
    auto tuples = select_distinct(ds, {"city"});
    CHECK(tuples.size() == 4);
    CHECK(std::is_sorted(tuples.begin(), tuples.end()));
}

TEST_CASE("LIKE wildcard semantics") {
    CHECK(like_match("paris", "paris"));
    CHECK(like_match("paris", "p%"));
    CHECK(like_match("paris", "%s"));
    CHECK(like_match("paris", "%ar%"));
    CHECK(like_match("paris", "p_ris"));
    CHECK(like_match("paris", "%"));
    CHECK(like_match("", "%"));
    CHECK_FALSE(like_match("paris", "P%"));  // case-sensitive
    CHECK_FALSE(like_match("paris", "p_is"));
    CHECK_FALSE(like_match("paris", "paris_"));
    CHECK(like_match("a%b", "a%b"));
    CHECK(like_match("abc", "a%%c"));
}

TEST_CASE("CSV round-trip preserves schema and values") {
    namespace fs = std::filesystem;
    ColumnarDataset ds = random_dataset(50, 21);
    fs::path dir = fs::temp_directory_path() / "mlaqp_test_csv";
    fs::create_directories(dir);
    std::string csv = (dir / "d.csv").string(), schema = (dir / "d.schema.json").string();
    save_csv(ds, csv, schema);
    ColumnarDataset back = load_csv(csv, schema);
    REQUIRE(back.rows() == ds.rows());
    REQUIRE(back.schema.d() == ds.schema.d());
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t r = 0; r < ds.rows(); ++r)
            CHECK(back.columns[c].nums[r] == ds.columns[c].nums[r]); // bit-exact via %.17g
    CHECK(back.columns[3].strs == ds.columns[3].strs);
    fs::remove_all(dir);
}

TEST_CASE("dataset validation rejects ragged columns and non-finite values") {
    ColumnarDataset ds = random_dataset(10, 1);
    CHECK_NOTHROW(ds.validate());
    ds.columns[0].nums.pop_back();
    CHECK_THROWS_AS(ds.validate(), error);
}

} // TEST_SUITE
