#include "mlaqp/workload.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mlaqp/vectorizer.hpp"

namespace mlaqp {

namespace {
constexpr double kDomainLo = 1e-8;
constexpr double kDomainHi = 1e8;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
} // namespace

void WorkloadSpec::validate() const {
    if (predicates > dims) throw error("predicates must be <= dims");
    if (n_queries < 1) throw error("n_queries must be >= 1");
    if (!(range_size > 0.0)) throw degenerate_range("range_size must be > 0");
    if (afs.empty()) throw error("workload needs at least one aggregate");
}

ColumnarDataset gen_dataset(std::size_t d, std::size_t n_rows, std::uint64_t seed) {
    if (d < 1 || n_rows < 1) throw error("gen_dataset needs d, n_rows >= 1");
    ColumnarDataset ds;
    ds.schema.name = "synthetic";
    for (std::size_t i = 0; i < d; ++i)
        ds.schema.attributes.push_back({"a" + std::to_string(i + 1), AttrKind::numeric, {}});
    ds.columns.resize(d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(kDomainLo, kDomainHi);
    for (std::size_t i = 0; i < d; ++i) {
        ds.columns[i].nums.resize(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r) ds.columns[i].nums[r] = dist(rng);
    }
    return ds;
}

double derive_range_size(const ColumnarDataset& ds, std::size_t n_bins) {
    if (n_bins < 1) throw error("n_bins must be >= 1");
    double total = 0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < ds.schema.d(); ++c) {
        if (ds.schema.at(c).kind != AttrKind::numeric) continue;
        const auto& col = ds.columns[c].nums;
        if (col.empty()) continue;
        auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        total += (*mx - *mn) / static_cast<double>(n_bins);
        ++counted;
    }
    if (counted == 0) throw error("no numeric columns");
    double r = total / static_cast<double>(counted);
    if (!(r > 0.0)) throw degenerate_range("constant columns give a zero range size");
    return r;
}

namespace {

bool wants_exact_rows(const std::vector<AggregateSpec>& afs) {
    for (const auto& af : afs)
        if (af.function == AggFn::avg || af.function == AggFn::min || af.function == AggFn::max)
            return true;
    return false;
}

std::string render_sql(const std::string& table, const std::vector<AggregateSpec>& afs,
                       const std::vector<Predicate>& preds) {
    std::ostringstream sql;
    sql << "SELECT ";
    for (std::size_t i = 0; i < afs.size(); ++i)
        sql << (i ? ", " : "") << afs[i].key();
    sql << " FROM " << table;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        sql << (i ? " AND " : " WHERE ") << preds[i].attribute << " BETWEEN "
            << fmt(*preds[i].lb) << " AND " << fmt(*preds[i].ub);
    }
    return sql.str();
}

GeneratedQuery make_query(const ColumnarDataset& ds, const std::vector<AggregateSpec>& afs,
                          std::vector<Predicate> preds) {
    GeneratedQuery gq;
    gq.sql = render_sql(ds.schema.name, afs, preds);
    gq.parsed.table = ds.schema.name;
    gq.parsed.aggregates = afs;
    gq.parsed.predicates = std::move(preds);
    gq.answers = execute_aggregate(ds, gq.parsed);
    return gq;
}

} // namespace

std::vector<GeneratedQuery> gen_queries(const WorkloadSpec& spec, const ColumnarDataset& ds) {
    spec.validate();
    if (spec.dims != ds.schema.d()) throw error("spec dims do not match the dataset");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> center_dist(kDomainLo, kDomainHi);
    double half = spec.range_size / 2.0;
    bool need_rows = wants_exact_rows(spec.afs);

    std::vector<GeneratedQuery> out;
    out.reserve(spec.n_queries);
    std::vector<std::size_t> cols(spec.dims);
    for (std::size_t qi = 0; qi < spec.n_queries; ++qi) {
        bool produced = false;
        for (int attempt = 0; attempt < 20 && !produced; ++attempt) {
            // p-subset of columns, then a center per selected column
            std::iota(cols.begin(), cols.end(), 0);
            for (std::size_t i = 0; i < spec.predicates; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, spec.dims - 1);
                std::swap(cols[i], cols[pick(rng)]);
            }
            std::vector<Predicate> preds;
            for (std::size_t i = 0; i < spec.predicates; ++i) {
                double center = center_dist(rng);
                double lb = center - half, ub = center + half;
                // clamp the window into the data domain
                if (lb < kDomainLo) {
                    ub += kDomainLo - lb;
                    lb = kDomainLo;
                }
                if (ub > kDomainHi) {
                    lb -= ub - kDomainHi;
                    ub = kDomainHi;
                }
                lb = std::max(lb, kDomainLo);
                preds.push_back({ds.schema.at(cols[i]).name, lb, ub});
            }
            std::sort(preds.begin(), preds.end(),
                      [](const Predicate& a, const Predicate& b) { return a.attribute < b.attribute; });
            GeneratedQuery gq = make_query(ds, spec.afs, std::move(preds));
            if (gq.answers.empty_selection && need_rows) continue;
            out.push_back(std::move(gq));
            produced = true;
        }
        if (!produced)
            throw degenerate_range("20 consecutive empty selections; range size too small");
    }
    return out;
}

std::vector<GeneratedQuery> gen_analyst_workload(const ColumnarDataset& ds,
                                                 std::size_t n_analysts,
                                                 double per_analyst_sigma, std::size_t n_queries,
                                                 const std::vector<AggregateSpec>& afs,
                                                 double range_size, std::uint64_t seed) {
    if (n_analysts < 1) throw error("need at least one analyst");
    if (!(range_size > 0.0)) throw degenerate_range("range_size must be > 0");
    std::size_t p = std::min<std::size_t>(2, ds.schema.d());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mean_dist(kDomainLo + 0.2 * (kDomainHi - kDomainLo),
                                                     kDomainHi - 0.2 * (kDomainHi - kDomainLo));
    std::vector<std::vector<double>> analyst_means(n_analysts, std::vector<double>(p));
    for (auto& m : analyst_means)
        for (double& v : m) v = mean_dist(rng);

    std::normal_distribution<double> noise(0.0, per_analyst_sigma);
    std::uniform_int_distribution<std::size_t> pick(0, n_analysts - 1);
    double half = range_size / 2.0;
    bool need_rows = wants_exact_rows(afs);

    std::vector<GeneratedQuery> out;
    out.reserve(n_queries);
    for (std::size_t qi = 0; qi < n_queries; ++qi) {
        bool produced = false;
        for (int attempt = 0; attempt < 20 && !produced; ++attempt) {
            std::size_t a = pick(rng);
            std::vector<Predicate> preds;
            for (std::size_t i = 0; i < p; ++i) {
                double center = std::clamp(analyst_means[a][i] + noise(rng), kDomainLo, kDomainHi);
                double lb = std::max(center - half, kDomainLo);
                double ub = std::min(center + half, kDomainHi);
                preds.push_back({ds.schema.at(i).name, lb, ub});
            }
            GeneratedQuery gq = make_query(ds, afs, std::move(preds));
            if (gq.answers.empty_selection && need_rows) continue;
            out.push_back(std::move(gq));
            produced = true;
        }
        if (!produced)
            throw degenerate_range("20 consecutive empty selections; range size too small");
    }
    return out;
}

std::map<std::string, TrainingSet> to_training_sets(const std::vector<GeneratedQuery>& queries,
                                                    const DatasetSchema& schema) {
    CategoricalEncoder enc;
    std::map<std::string, TrainingSet> out;
    for (const auto& gq : queries) {
        MetaVector meta = vectorize_spa(gq.parsed, schema, enc).meta;
        for (const auto& af : gq.parsed.aggregates) {
            auto it = gq.answers.values.find(af.key());
            if (it == gq.answers.values.end()) continue; // empty-selection AF dropped
            TrainingSet& ts = out[af.key()];
            ts.af = af;
            ts.pairs.push_back({meta, af, it->second});
        }
    }
    return out;
}

void append_log_line(std::ostream& out, const LogLine& line) {
    nlohmann::json j;
    j["sql"] = line.sql;
    j["answers"] = nlohmann::json::object();
    for (const auto& [k, v] : line.answers) j["answers"][k] = v;
    if (!line.groups.empty()) {
        j["groups"] = nlohmann::json::array();
        for (const auto& [key, answers] : line.groups) {
            nlohmann::json g;
            g["key"] = key;
            g["answers"] = nlohmann::json::object();
            for (const auto& [k, v] : answers) g["answers"][k] = v;
            j["groups"].push_back(g);
        }
    }
    out << j.dump() << "\n";
}

void write_query_log(const std::vector<GeneratedQuery>& queries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write query log " + path);
    for (const auto& gq : queries) {
        LogLine line;
        line.sql = gq.sql;
        line.answers = gq.answers.values;
        append_log_line(out, line);
    }
}

LogLine parse_log_line(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        LogLine line;
        line.sql = j.at("sql").get<std::string>();
        if (j.contains("answers"))
            for (const auto& [k, v] : j.at("answers").items()) line.answers[k] = v.get<double>();
        if (j.contains("groups")) {
            for (const auto& g : j.at("groups")) {
                std::vector<std::string> key = g.at("key").get<std::vector<std::string>>();
                std::map<std::string, double> answers;
                for (const auto& [k, v] : g.at("answers").items()) answers[k] = v.get<double>();
                line.groups.emplace_back(std::move(key), std::move(answers));
            }
        }
        return line;
    } catch (const nlohmann::json::exception& e) {
        throw error(std::string("malformed query-log line: ") + e.what());
    }
}

std::vector<LogLine> read_query_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open query log " + path);
    std::vector<LogLine> lines;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.empty()) continue;
        try {
            lines.push_back(parse_log_line(text));
        } catch (const std::exception& e) {
            throw error("query log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return lines;
}

} // namespace mlaqp
