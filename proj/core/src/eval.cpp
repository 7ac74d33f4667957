#include "mlaqp/eval.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "mlaqp/parser.hpp"
#include "mlaqp/vectorizer.hpp"

namespace mlaqp {

double relative_error(double y, double yhat) {
    if (y == 0.0) throw zero_truth("relative error undefined for y = 0");
    return std::abs(y - yhat) / std::abs(y);
}

double normalized_error(double y, double yhat, double ybar) {
    if (ybar == 0.0) throw zero_mean("normalized error undefined for mean response 0");
    return std::abs(y - yhat) / std::abs(ybar);
}

double exact_median(std::vector<double> values) {
    if (values.empty()) throw error("median of an empty sample");
    std::size_t k = (values.size() - 1) / 2; // lower median
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

void split_training_set(const TrainingSet& all, double split, std::uint64_t seed,
                        TrainingSet& train, TrainingSet& test) {
    if (!(split > 0.0 && split < 1.0)) throw error("split fraction must lie inside (0,1)");
    std::vector<std::size_t> order(all.pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(split * static_cast<double>(all.pairs.size())));
    train.af = test.af = all.af;
    train.pairs.clear();
    test.pairs.clear();
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? train : test).pairs.push_back(all.pairs[order[i]]);
}

ModelCatalogue build_catalogue(const std::map<std::string, TrainingSet>& per_af,
                               const DatasetSchema& schema, const CategoricalEncoder& encoder,
                               const EvalConfig& cfg) {
    ModelCatalogue cat;
    cat.schema = schema;
    cat.encoder = encoder;
    std::optional<WorkloadStats> stats;
    for (const auto& [key, ts] : per_af) {
        ModelCatalogue::Entry entry;
        entry.point = fit(ts, cfg.point_cfg, Loss::squared());
        if (cfg.with_intervals)
            entry.interval = fit_interval(ts, cfg.interval_t, cfg.quantile_cfg);
        if (cfg.with_ensemble) {
            ClusterSet cs;
            for (const auto& p : ts.pairs) cs.observe(p.meta);
            if (cs.size() > 0) entry.ensemble = fit_local_models(cs, ts, cfg.point_cfg);
        }
        std::vector<double> answers;
        for (const auto& p : ts.pairs) {
            answers.push_back(p.answer);
            if (!stats) stats.emplace(p.meta.width());
            stats->add(p.meta);
        }
        cat.answer_ecdfs.emplace(key, AnswerEcdf(std::move(answers)));
        cat.entries.emplace(key, std::move(entry));
    }
    if (stats && stats->count() >= 2) {
        stats->finalize();
        cat.workload_stats = std::move(stats);
    }
    return cat;
}

namespace {

LatencySummary summarize_micros(std::vector<double> micros) {
    LatencySummary s;
    if (micros.empty()) return s;
    s.mean_micros = std::accumulate(micros.begin(), micros.end(), 0.0) /
                    static_cast<double>(micros.size());
    std::size_t k = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(micros.size()))) - 1;
    std::nth_element(micros.begin(), micros.begin() + static_cast<std::ptrdiff_t>(k), micros.end());
    s.p95_micros = micros[k];
    return s;
}

double now_micros_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

EvalReport run_protocol(const std::map<std::string, TrainingSet>& workload,
                        const DatasetSchema& schema, const CategoricalEncoder& encoder,
                        const std::vector<std::string>& latency_sqls, const EvalConfig& cfg) {
    EvalReport report;
    std::map<std::string, TrainingSet> train_parts;
    std::map<std::string, TrainingSet> test_parts;
    for (const auto& [key, ts] : workload) {
        if (ts.pairs.size() < 10)
            throw insufficient_workload("AF '" + key + "' has fewer than 10 pairs");
        TrainingSet train, test;
        split_training_set(ts, cfg.split, cfg.split_seed, train, test);
        train_parts.emplace(key, std::move(train));
        test_parts.emplace(key, std::move(test));
    }

    ModelCatalogue cat = build_catalogue(train_parts, schema, encoder, cfg);

    for (const auto& [key, test] : test_parts) {
        const auto& entry = cat.entries.at(key);
        AfMetrics m;
        m.n_test = test.pairs.size();
        double ybar = 0;
        for (const auto& p : test.pairs) ybar += p.answer;
        ybar /= static_cast<double>(test.pairs.size());

        std::vector<double> rel, norm, abse;
        for (const auto& p : test.pairs) {
            double yhat = entry.point.predict(p.meta);
            abse.push_back(std::abs(p.answer - yhat));
            if (ybar != 0.0) norm.push_back(normalized_error(p.answer, yhat, ybar));
            if (p.answer == 0.0) {
                ++m.zero_truth_excluded;
                continue;
            }
            rel.push_back(relative_error(p.answer, yhat));
        }
        if (!rel.empty()) m.median_relative_error = exact_median(rel);
        if (!norm.empty()) m.median_normalized_error = exact_median(norm);
        m.median_absolute_error = exact_median(abse);
        if (entry.interval) m.coverage_ratio = coverage_ratio(*entry.interval, test);
        report.per_af[key] = m;
    }

    // error-vs-queries curves: refit on training prefixes, same held-out part
    for (std::size_t n_train : cfg.curve_points) {
        for (const auto& [key, train] : train_parts) {
            if (train.pairs.size() < n_train) continue;
            TrainingSet prefix;
            prefix.af = train.af;
            prefix.pairs.assign(train.pairs.begin(),
                                train.pairs.begin() + static_cast<std::ptrdiff_t>(n_train));
            GbdtModel model = fit(prefix, cfg.point_cfg, Loss::squared());
            std::vector<double> rel;
            for (const auto& p : test_parts.at(key).pairs) {
                if (p.answer == 0.0) continue;
                rel.push_back(relative_error(p.answer, model.predict(p.meta)));
            }
            if (!rel.empty())
                report.error_curves[key].emplace_back(n_train, exact_median(rel));
        }
    }

    // inference-only latency over held-out vectors
    {
        std::vector<double> micros;
        micros.reserve(10000);
        std::size_t produced = 0;
        while (produced < 10000) {
            for (const auto& [key, test] : test_parts) {
                const auto& model = cat.entries.at(key).point;
                for (const auto& p : test.pairs) {
                    auto t0 = std::chrono::steady_clock::now();
                    volatile double y = model.predict(p.meta);
                    (void)y;
                    micros.push_back(now_micros_since(t0));
                    if (++produced >= 10000) break;
                }
                if (produced >= 10000) break;
            }
        }
        report.inference = summarize_micros(std::move(micros));
    }

    // end-to-end latency: parse + vectorize + predict
    if (!latency_sqls.empty()) {
        std::vector<double> micros;
        micros.reserve(10000);
        std::size_t produced = 0;
        while (produced < 10000) {
            for (const auto& sql : latency_sqls) {
                auto t0 = std::chrono::steady_clock::now();
                ParsedQuery q = parse(sql, schema);
                MetaVector meta = vectorize_spa(q, schema, encoder).meta;
                for (const auto& af : q.aggregates) {
                    auto it = cat.entries.find(af.key());
                    if (it != cat.entries.end()) {
                        volatile double y = it->second.point.predict(meta);
                        (void)y;
                    }
                }
                micros.push_back(now_micros_since(t0));
                if (++produced >= 10000) break;
            }
        }
        report.end_to_end = summarize_micros(std::move(micros));
    }

    // serialized catalogue size
    namespace fs = std::filesystem;
    fs::path tmp = fs::temp_directory_path() / ("mlaqp_eval_cat_" + std::to_string(::getpid()));
    save(cat, tmp.string());
    report.catalogue_bytes = catalogue_bytes(tmp.string());
    std::error_code ec;
    fs::remove_all(tmp, ec);

    return report;
}

std::string EvalReport::to_text() const {
    std::ostringstream os;
    os << "AF                   med-rel-err  med-norm-err  med-abs-err     coverage  n\n";
    for (const auto& [key, m] : per_af) {
        os << key;
        for (std::size_t i = key.size(); i < 20; ++i) os << ' ';
        char buf[160];
        std::snprintf(buf, sizeof buf, " %10.4f  %11.4f  %11.4g  %10s  %zu\n",
                      m.median_relative_error, m.median_normalized_error,
                      m.median_absolute_error,
                      m.coverage_ratio ? std::to_string(*m.coverage_ratio).substr(0, 6).c_str()
                                       : "-",
                      m.n_test);
        os << buf;
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "inference latency: mean %.1f us, p95 %.1f us\n"
                  "end-to-end latency: mean %.1f us, p95 %.1f us\n"
                  "catalogue size: %.2f MB\n",
                  inference.mean_micros, inference.p95_micros, end_to_end.mean_micros,
                  end_to_end.p95_micros, static_cast<double>(catalogue_bytes) / 1e6);
    os << buf;
    for (const auto& [key, curve] : error_curves) {
        os << "curve " << key << ":";
        for (const auto& [n, err] : curve) {
            std::snprintf(buf, sizeof buf, " (%zu, %.4f)", n, err);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    for (const auto& [key, m] : per_af) {
        nlohmann::json jm;
        jm["median_relative_error"] = m.median_relative_error;
        jm["median_normalized_error"] = m.median_normalized_error;
        jm["median_absolute_error"] = m.median_absolute_error;
        if (m.coverage_ratio) jm["coverage_ratio"] = *m.coverage_ratio;
        jm["n_test"] = m.n_test;
        jm["zero_truth_excluded"] = m.zero_truth_excluded;
        j["per_af"][key] = jm;
    }
    j["inference"] = {{"mean_micros", inference.mean_micros}, {"p95_micros", inference.p95_micros}};
    j["end_to_end"] = {{"mean_micros", end_to_end.mean_micros},
                       {"p95_micros", end_to_end.p95_micros}};
    j["catalogue_bytes"] = catalogue_bytes;
    for (const auto& [key, curve] : error_curves) {
        nlohmann::json jc = nlohmann::json::array();
        for (const auto& [n, err] : curve) jc.push_back({{"n_train", n}, {"error", err}});
        j["error_curves"][key] = jc;
    }
    return j.dump(2);
}

} // namespace mlaqp
