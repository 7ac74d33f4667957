// Microbenchmarks for the hot paths: model inference, SQL parsing +
// vectorization, training, and the drift statistics.

#include <benchmark/benchmark.h>

#include <random>

#include "mlaqp/drift.hpp"
#include "mlaqp/eval.hpp"
#include "mlaqp/gbdt.hpp"
#include "mlaqp/parser.hpp"
#include "mlaqp/vectorizer.hpp"
#include "mlaqp/workload.hpp"

using namespace mlaqp;

namespace {

struct Fixture {
    ColumnarDataset ds;
    std::vector<GeneratedQuery> queries;
    GbdtModel model;
    DatasetSchema schema;

    Fixture() {
        ds = gen_dataset(10, 20000, 42);
        schema = ds.schema;
        WorkloadSpec spec;
        spec.n_queries = 600;
        spec.dims = 10;
        spec.predicates = 2;
        spec.range_size = derive_range_size(ds, 8);
        spec.seed = 43;
        spec.afs = {{AggFn::count, {}}};
        queries = gen_queries(spec, ds);
        auto sets = to_training_sets(queries, schema);
        GbdtConfig cfg;
        cfg.rounds = 500;
        model = fit(sets.at("COUNT(*)"), cfg, Loss::squared());
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_Predict(benchmark::State& state) {
    Fixture& f = fixture();
    std::size_t i = 0;
    auto sets = to_training_sets(f.queries, f.schema);
    const auto& pairs = sets.at("COUNT(*)").pairs;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.model.predict(pairs[i % pairs.size()].meta));
        ++i;
    }
}
BENCHMARK(BM_Predict);

void BM_ParseAndVectorize(benchmark::State& state) {
    Fixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& sql = f.queries[i % f.queries.size()].sql;
        ParsedQuery q = parse(sql, f.schema);
        benchmark::DoNotOptimize(vectorize_spa(q, f.schema, CategoricalEncoder{}));
        ++i;
    }
}
BENCHMARK(BM_ParseAndVectorize);

void BM_EndToEnd(benchmark::State& state) {
    Fixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& sql = f.queries[i % f.queries.size()].sql;
        ParsedQuery q = parse(sql, f.schema);
        auto v = vectorize_spa(q, f.schema, CategoricalEncoder{});
        benchmark::DoNotOptimize(f.model.predict(v.meta));
        ++i;
    }
}
BENCHMARK(BM_EndToEnd);

void BM_KsTest(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(1000), b(static_cast<std::size_t>(state.range(0)));
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    AnswerEcdf ea(a), eb(b);
    for (auto _ : state) benchmark::DoNotOptimize(ks_statistic(ea, eb));
}
BENCHMARK(BM_KsTest)->Arg(200)->Arg(1000);

void BM_Mahalanobis(benchmark::State& state) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    WorkloadStats stats(20);
    for (int i = 0; i < 2000; ++i) {
        MetaVector m(20);
        for (auto& v : m.values) v = n(rng);
        stats.add(m);
    }
    stats.finalize();
    MetaVector probe(20);
    for (auto& v : probe.values) v = n(rng);
    for (auto _ : state) benchmark::DoNotOptimize(stats.mahalanobis(probe));
}
BENCHMARK(BM_Mahalanobis);

void BM_Fit(benchmark::State& state) {
    Fixture& f = fixture();
    auto sets = to_training_sets(f.queries, f.schema);
    GbdtConfig cfg;
    cfg.rounds = static_cast<std::size_t>(state.range(0));
    cfg.early_stopping_rounds = std::nullopt;
    for (auto _ : state)
        benchmark::DoNotOptimize(fit(sets.at("COUNT(*)"), cfg, Loss::squared()));
}
BENCHMARK(BM_Fit)->Arg(50)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
