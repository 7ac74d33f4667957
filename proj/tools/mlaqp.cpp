// mlaqp command-line front end: workload generation, training, evaluation,
// serving, an interactive repl and a log-tailing drift monitor.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlaqp/drift.hpp"
#include "mlaqp/eval.hpp"
#include "mlaqp/executor.hpp"
#include "mlaqp/parser.hpp"
#include "mlaqp/vectorizer.hpp"
#include "mlaqp/workload.hpp"
#include "service.hpp"

namespace {

using namespace mlaqp;
using nlohmann::json;

// Histogram resolution chosen so a p-predicate query selects roughly the
// target fraction of rows: each predicate contributes s^(1/p), and the bin
// width is the per-predicate range achieving that fraction.
std::size_t bins_for_selectivity(double selectivity, std::size_t predicates) {
    double per_pred = std::pow(selectivity, 1.0 / static_cast<double>(predicates));
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(1.0 / per_pred)));
}

std::vector<AggregateSpec> parse_af_list(const std::string& csv) {
    std::vector<AggregateSpec> afs;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto first = item.find_first_not_of(" \t");
        auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) continue;
        item = item.substr(first, last - first + 1);
        auto spec = aggregate_spec_from_key(item);
        if (!spec) throw error("unrecognized aggregate '" + item + "'");
        afs.push_back(*spec);
    }
    if (afs.empty()) throw error("empty aggregate list");
    return afs;
}

void write_schema_json(const DatasetSchema& schema, const std::string& path) {
    json j;
    j["name"] = schema.name;
    j["attributes"] = json::array();
    for (const auto& a : schema.attributes) {
        json ja;
        ja["name"] = a.name;
        ja["kind"] = a.kind == AttrKind::numeric ? "numeric" : "categorical";
        if (a.cardinality) ja["cardinality"] = *a.cardinality;
        j["attributes"].push_back(ja);
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

// A query log digested into trainable form: per-AF pairs, the encoder fitted
// from the values the log actually used, the GROUP-BY tuples it revealed.
struct IngestedLog {
    DatasetSchema schema;
    CategoricalEncoder encoder;
    GroupByCatalogue groupby;
    std::map<std::string, TrainingSet> per_af;
    std::vector<std::string> sqls;
    std::size_t total_lines = 0;
    std::vector<std::string> line_errors;
};

IngestedLog ingest_log(const std::string& log_path, const std::string& schema_path,
                       std::size_t cardinality_threshold, double max_bad_fraction) {
    IngestedLog out;
    out.schema = load_schema_json(schema_path);
    out.encoder = CategoricalEncoder(cardinality_threshold);

    std::vector<LogLine> lines = read_query_log(log_path);
    out.total_lines = lines.size();
    if (lines.empty()) throw error("query log " + log_path + " is empty");

    // first pass: parse, collect categorical values so the encoder layout is
    // fixed before any vectorization happens
    std::vector<std::optional<ParsedQuery>> parsed(lines.size());
    std::map<std::string, std::set<std::string>> observed_values;
    std::map<std::vector<std::string>, std::set<std::vector<std::string>>> group_tuples;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            parsed[i] = parse(lines[i].sql, out.schema);
        } catch (const std::exception& e) {
            out.line_errors.push_back("line " + std::to_string(i + 1) + ": " + e.what());
            continue;
        }
        const ParsedQuery& q = *parsed[i];
        for (const auto& [attr, value] : q.categorical_equalities)
            observed_values[attr].insert(value);
        if (!q.group_by.empty()) {
            auto& tuples = group_tuples[q.group_by];
            for (const auto& g : lines[i].groups) {
                tuples.insert(g.first);
                for (std::size_t k = 0; k < q.group_by.size() && k < g.first.size(); ++k) {
                    auto idx = out.schema.index_of(q.group_by[k]);
                    if (idx && out.schema.at(*idx).kind == AttrKind::categorical)
                        observed_values[q.group_by[k]].insert(g.first[k]);
                }
            }
        }
    }
    if (static_cast<double>(out.line_errors.size()) >
        max_bad_fraction * static_cast<double>(lines.size()))
        throw error("too many unparseable log lines (" +
                    std::to_string(out.line_errors.size()) + " of " +
                    std::to_string(lines.size()) + ")");

    for (const auto& attr : out.schema.attributes) {
        if (attr.kind != AttrKind::categorical) continue;
        if (out.encoder.mode_of(attr) != CatMode::dummy) continue;
        auto it = observed_values.find(attr.name);
        std::vector<std::string> values;
        if (it != observed_values.end()) values.assign(it->second.begin(), it->second.end());
        out.encoder.fit_attribute(attr, std::move(values));
    }
    for (auto& [attrs, tuples] : group_tuples)
        out.groupby.put(attrs, {tuples.begin(), tuples.end()});

    // second pass: vectorize and pair with the logged answers
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!parsed[i]) continue;
        const ParsedQuery& q = *parsed[i];
        out.sqls.push_back(lines[i].sql);
        auto add_pair = [&](const std::string& key, double answer, const MetaVector& meta) {
            auto spec = aggregate_spec_from_key(key);
            if (!spec) {
                out.line_errors.push_back("line " + std::to_string(i + 1) +
                                          ": unknown answer key '" + key + "' (skipped)");
                return;
            }
            auto& ts = out.per_af[key];
            ts.af = *spec;
            ts.pairs.push_back({meta, *spec, answer});
        };
        try {
            if (q.group_by.empty()) {
                MetaVector meta = vectorize_spa(q, out.schema, out.encoder).meta;
                for (const auto& [key, answer] : lines[i].answers) add_pair(key, answer, meta);
            } else {
                auto rows = expand_group_by(q, out.groupby, out.schema, out.encoder);
                std::map<std::vector<std::string>, const MetaVector*> by_key;
                for (const auto& row : rows) by_key.emplace(row.group_values, &row.meta);
                for (const auto& [tuple, answers] : lines[i].groups) {
                    auto it = by_key.find(tuple);
                    if (it == by_key.end()) continue;
                    for (const auto& [key, answer] : answers) add_pair(key, answer, *it->second);
                }
            }
        } catch (const std::exception& e) {
            out.line_errors.push_back("line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

DriftMonitor make_monitor(const ModelCatalogue& cat, const std::string& af_key, double alpha,
                          std::size_t window) {
    if (!cat.workload_stats)
        throw error("catalogue carries no workload statistics; retrain with >= 2 queries");
    auto it = af_key.empty() ? cat.answer_ecdfs.begin() : cat.answer_ecdfs.find(af_key);
    if (it == cat.answer_ecdfs.end())
        throw error("no answer sample for aggregate '" + af_key + "' in the catalogue");
    return DriftMonitor(it->second, *cat.workload_stats, alpha, window);
}

void emit_drift_events(const std::vector<DriftMonitor::Event>& events, std::ostream& os) {
    for (const auto& ev : events) {
        json j;
        j["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
        j["kind"] = ev.kind == DriftMonitor::Event::Kind::data ? "data" : "workload";
        j["statistic"] = ev.statistic;
        j["threshold"] = ev.threshold;
        os << j.dump() << "\n";
        os.flush();
    }
}

// ---------------------------------------------------------------- gen-workload

struct GenArgs {
    std::size_t rows = 100000, dims = 10, predicates = 2, queries = 1000;
    std::uint64_t seed = 42;
    double selectivity = 1e-3;
    std::string afs = "COUNT(*),SUM(a1),AVG(a1),MIN(a1),MAX(a1)";
    std::string out_log = "workload.jsonl";
    std::string out_schema = "schema.json";
    std::string out_csv;
};

int run_gen(const GenArgs& a) {
    std::vector<AggregateSpec> afs = parse_af_list(a.afs);
    ColumnarDataset ds = gen_dataset(a.dims, a.rows, a.seed);
    std::size_t n_bins = bins_for_selectivity(a.selectivity, a.predicates);
    WorkloadSpec spec;
    spec.n_queries = a.queries;
    spec.dims = a.dims;
    spec.predicates = a.predicates;
    spec.range_size = derive_range_size(ds, n_bins);
    spec.seed = a.seed + 1;
    spec.afs = afs;
    auto queries = gen_queries(spec, ds);
    write_query_log(queries, a.out_log);
    write_schema_json(ds.schema, a.out_schema);
    if (!a.out_csv.empty()) save_csv(ds, a.out_csv, a.out_schema);
    std::cout << "wrote " << queries.size() << " queries to " << a.out_log << " (range size "
              << spec.range_size << ", " << n_bins << " bins)\n";
    return 0;
}

// ----------------------------------------------------------------------- train

struct TrainArgs {
    std::string log, schema, out = "catalogue";
    bool no_intervals = false, ensemble = false, verbose = false;
    double interval_t = 0.1;
    std::size_t rounds = GbdtConfig{}.rounds;
    double learning_rate = GbdtConfig{}.learning_rate;
    std::size_t max_depth = GbdtConfig{}.max_depth;
    std::size_t min_samples_leaf = GbdtConfig{}.min_samples_leaf;
    std::size_t cardinality_threshold = CategoricalEncoder::kDefaultCardinalityThreshold;
};

int run_train(const TrainArgs& a) {
    IngestedLog log = ingest_log(a.log, a.schema, a.cardinality_threshold, 0.10);
    for (const auto& e : log.line_errors) std::cerr << "warning: " << e << "\n";

    EvalConfig cfg;
    cfg.with_intervals = !a.no_intervals;
    cfg.with_ensemble = a.ensemble;
    cfg.interval_t = a.interval_t;
    cfg.point_cfg.rounds = a.rounds;
    cfg.point_cfg.learning_rate = a.learning_rate;
    cfg.point_cfg.max_depth = a.max_depth;
    cfg.point_cfg.min_samples_leaf = a.min_samples_leaf;
    cfg.quantile_cfg.min_samples_leaf = a.min_samples_leaf;

    ModelCatalogue cat = build_catalogue(log.per_af, log.schema, log.encoder, cfg);
    cat.groupby = log.groupby;
    save(cat, a.out);
    std::cout << "trained " << cat.entries.size() << " model(s) on " << log.sqls.size()
              << " queries; catalogue " << a.out << " ("
              << static_cast<double>(catalogue_bytes(a.out)) / 1e6 << " MB)\n";
    if (a.verbose)
        for (const auto& [key, entry] : cat.entries)
            std::cout << "  " << key << ": " << entry.point.trees.size() << " trees\n";
    return 0;
}

// ------------------------------------------------------------------------ eval

struct EvalArgs {
    std::string log, schema; // log mode
    std::size_t rows = 100000, dims = 10, predicates = 2, queries = 1000; // synthetic mode
    std::uint64_t seed = 42;
    double selectivity = 1e-3;
    std::string afs = "COUNT(*),SUM(a1),AVG(a1),MIN(a1),MAX(a1)";
    std::string json_out;
    bool curves = false, ensemble = false;
};

int run_eval(const EvalArgs& a) {
    std::map<std::string, TrainingSet> per_af;
    DatasetSchema schema;
    CategoricalEncoder encoder;
    std::vector<std::string> sqls;
    if (!a.log.empty()) {
        IngestedLog log = ingest_log(a.log, a.schema, CategoricalEncoder::kDefaultCardinalityThreshold, 0.10);
        for (const auto& e : log.line_errors) std::cerr << "warning: " << e << "\n";
        per_af = std::move(log.per_af);
        schema = log.schema;
        encoder = log.encoder;
        sqls = std::move(log.sqls);
    } else {
        GenArgs g;
        g.rows = a.rows;
        g.dims = a.dims;
        g.predicates = a.predicates;
        g.queries = a.queries;
        g.seed = a.seed;
        g.selectivity = a.selectivity;
        ColumnarDataset ds = gen_dataset(g.dims, g.rows, g.seed);
        WorkloadSpec spec;
        spec.n_queries = g.queries;
        spec.dims = g.dims;
        spec.predicates = g.predicates;
        spec.range_size = derive_range_size(ds, bins_for_selectivity(g.selectivity, g.predicates));
        spec.seed = g.seed + 1;
        spec.afs = parse_af_list(a.afs);
        auto queries = gen_queries(spec, ds);
        per_af = to_training_sets(queries, ds.schema);
        schema = ds.schema;
        for (const auto& q : queries) sqls.push_back(q.sql);
    }

    EvalConfig cfg;
    cfg.with_ensemble = a.ensemble;
    if (a.curves) cfg.curve_points = {100, 300, 1000};
    EvalReport report = run_protocol(per_af, schema, encoder, sqls, cfg);
    std::cout << report.to_text();
    if (!a.json_out.empty()) {
        std::ofstream out(a.json_out);
        if (!out) throw io_error("cannot write " + a.json_out);
        out << report.to_json() << "\n";
        std::cout << "report written to " << a.json_out << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------------- serve

int run_serve(const std::string& catalogue_dir, const std::string& bind, int port) {
    auto predictor = std::make_shared<const Predictor>(load(catalogue_dir));
    PredictionServer server(predictor, bind, port);
    std::cout << "catalogue " << catalogue_dir << " loaded ("
              << predictor->catalogue().entries.size() << " models); serving on " << bind << ":"
              << port << "\n";
    if (!server.start()) {
        std::cerr << "error: cannot bind " << bind << ":" << port << "\n";
        return 1;
    }
    return 0;
}

// ------------------------------------------------------------------------ repl

int run_repl(const std::string& catalogue_dir, const std::string& af_key) {
    Predictor predictor{load(catalogue_dir)};
    std::optional<DriftMonitor> monitor;
    std::size_t observed = 0, data_events = 0, workload_events = 0;
    try {
        monitor.emplace(make_monitor(predictor.catalogue(), af_key, 0.05,
                                     DriftMonitor::kDefaultWindow));
    } catch (const std::exception& e) {
        std::cerr << "note: drift monitoring unavailable (" << e.what() << ")\n";
    }

    std::cout << "mlaqp repl; enter an aggregate query, .explain <sql>, .drift or .quit\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
            if (line == ".quit" || line == ".exit") break;
            if (line == ".drift") {
                if (!monitor) {
                    std::cout << "drift monitoring unavailable\n";
                } else {
                    std::cout << "observed " << observed << " queries (window "
                              << monitor->window() << "); events: " << data_events << " data, "
                              << workload_events << " workload\n";
                }
                continue;
            }
            if (line.rfind(".explain ", 0) == 0) {
                std::string sql = line.substr(9);
                ParsedQuery q = parse(sql, predictor.catalogue().schema);
                std::cout << "table: " << q.table << "\naggregates:";
                for (const auto& af : q.aggregates) std::cout << " " << af.key();
                std::cout << "\n";
                if (q.group_by.empty()) {
                    MetaVector meta = vectorize_spa(q, predictor.catalogue().schema,
                                                    predictor.catalogue().encoder)
                                          .meta;
                    std::cout << "meta vector (" << meta.width() << " slots, "
                              << meta.present_count() << " set):";
                    for (std::size_t s = 0; s < meta.width(); ++s)
                        if (meta.present(s)) std::cout << " [" << s << "]=" << meta.values[s];
                    std::cout << "\n";
                } else {
                    std::cout << "grouped on:";
                    for (const auto& g : q.group_by) std::cout << " " << g;
                    std::cout << "\n";
                }
                continue;
            }
            if (line[0] == '.') {
                std::cout << "unknown command " << line << "\n";
                continue;
            }
            Predictor::Answer answer = predictor.answer_sql(line);
            for (const auto& a : answer.answers) {
                std::cout << a.model_id << " = " << a.estimate;
                if (a.interval)
                    std::cout << "  [" << a.interval->low << ", " << a.interval->high << "] ("
                              << a.interval->nominal_coverage * 100 << "% nominal)";
                std::cout << "\n";
            }
            for (const auto& g : answer.groups) {
                std::cout << "(";
                for (std::size_t i = 0; i < g.key.size(); ++i)
                    std::cout << (i ? ", " : "") << g.key[i];
                std::cout << "):";
                for (const auto& a : g.answers) std::cout << " " << a.model_id << "=" << a.estimate;
                std::cout << "\n";
            }
            std::cout << "latency: " << answer.latency_micros << " us\n";
            if (monitor && !answer.answers.empty()) {
                ++observed;
                auto events = monitor->observe(answer.meta, answer.answers.front().estimate);
                for (const auto& ev : events)
                    (ev.kind == DriftMonitor::Event::Kind::data ? data_events : workload_events)++;
                emit_drift_events(events, std::cout);
            }
        } catch (const std::exception& e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
    return 0;
}

// --------------------------------------------------------------------- monitor

struct MonitorArgs {
    std::string catalogue, log, af;
    double alpha = 0.05;
    std::size_t window = DriftMonitor::kDefaultWindow;
    int poll_ms = 200;
    bool once = false;
};

int run_monitor(const MonitorArgs& a) {
    ModelCatalogue cat = load(a.catalogue);
    DriftMonitor monitor = make_monitor(cat, a.af, a.alpha, a.window);
    std::string preferred = a.af.empty() ? cat.answer_ecdfs.begin()->first : a.af;

    auto feed = [&](const std::string& text, std::size_t line_no) {
        try {
            LogLine line = parse_log_line(text);
            ParsedQuery q = parse(line.sql, cat.schema);
            if (!q.group_by.empty()) return; // grouped lines are skipped
            MetaVector meta = vectorize_spa(q, cat.schema, cat.encoder).meta;
            auto it = line.answers.find(preferred);
            if (it == line.answers.end() && !line.answers.empty()) it = line.answers.begin();
            if (it == line.answers.end()) return;
            emit_drift_events(monitor.observe(meta, it->second), std::cout);
        } catch (const std::exception& e) {
            std::cerr << "warning: line " << line_no << ": " << e.what() << "\n";
        }
    };

    std::ifstream in;
    std::uintmax_t offset = 0;
    std::size_t line_no = 0;
    std::string carry;
    auto open_log = [&]() {
        in.close();
        in.clear();
        in.open(a.log);
        offset = 0;
        line_no = 0;
        carry.clear();
        return in.good();
    };
    if (!open_log()) {
        std::cerr << "error: cannot open " << a.log << "\n";
        return 1;
    }

    for (;;) {
        std::string chunk(1 << 16, '\0');
        in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
        std::streamsize got = in.gcount();
        if (got > 0) {
            offset += static_cast<std::uintmax_t>(got);
            carry.append(chunk.data(), static_cast<std::size_t>(got));
            std::size_t start = 0, nl;
            while ((nl = carry.find('\n', start)) != std::string::npos) {
                std::string text = carry.substr(start, nl - start);
                start = nl + 1;
                ++line_no;
                if (!text.empty()) feed(text, line_no);
            }
            carry.erase(0, start);
            in.clear(); // clear eof so the stream can pick up appended data
            continue;
        }
        if (a.once) break;
        in.clear();
        std::this_thread::sleep_for(std::chrono::milliseconds(a.poll_ms));
        std::error_code ec;
        auto size = std::filesystem::file_size(a.log, ec);
        if (!ec && size < offset) {
            // the log was rotated out from under us; start over on the new file
            std::cerr << "note: " << a.log << " rotated; reopening\n";
            if (!open_log()) {
                std::cerr << "error: cannot reopen " << a.log << "\n";
                return 1;
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-driven approximate query processing engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file");

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen-workload", "generate a synthetic dataset and query log");
    cgen->add_option("--rows", gen.rows, "dataset rows")->envname("MLAQP_ROWS");
    cgen->add_option("--dims", gen.dims, "numeric attributes")->envname("MLAQP_DIMS");
    cgen->add_option("--predicates", gen.predicates, "predicates per query");
    cgen->add_option("--queries", gen.queries, "queries to generate");
    cgen->add_option("--seed", gen.seed, "rng seed")->envname("MLAQP_SEED");
    cgen->add_option("--selectivity", gen.selectivity, "target fraction of rows per query");
    cgen->add_option("--afs", gen.afs, "comma-separated aggregates, e.g. COUNT(*),AVG(a1)");
    cgen->add_option("--out", gen.out_log, "query-log output path");
    cgen->add_option("--schema-out", gen.out_schema, "schema JSON output path");
    cgen->add_option("--csv-out", gen.out_csv, "also dump the dataset as CSV");

    TrainArgs train;
    auto* ctrain = app.add_subcommand("train", "fit models from a query log");
    ctrain->add_option("--log", train.log, "query log (JSON lines)")->required();
    ctrain->add_option("--schema", train.schema, "schema JSON")->required();
    ctrain->add_option("--out", train.out, "catalogue output directory")
        ->envname("MLAQP_CATALOGUE");
    ctrain->add_flag("--no-intervals", train.no_intervals, "skip quantile models");
    ctrain->add_flag("--ensemble", train.ensemble, "also fit per-cluster local models");
    ctrain->add_flag("-v,--verbose", train.verbose, "per-model detail");
    ctrain->add_option("--interval-t", train.interval_t, "interval miscoverage level");
    ctrain->add_option("--rounds", train.rounds, "max boosting rounds");
    ctrain->add_option("--learning-rate", train.learning_rate, "shrinkage");
    ctrain->add_option("--max-depth", train.max_depth, "tree depth limit");
    ctrain->add_option("--min-samples-leaf", train.min_samples_leaf, "leaf size floor");
    ctrain->add_option("--cardinality-threshold", train.cardinality_threshold,
                       "dummy-vs-hash categorical cutoff");

    EvalArgs ev;
    auto* ceval = app.add_subcommand("eval", "train/test evaluation with error and latency metrics");
    ceval->add_option("--log", ev.log, "evaluate this query log instead of a synthetic workload");
    ceval->add_option("--schema", ev.schema, "schema JSON (log mode)");
    ceval->add_option("--rows", ev.rows, "dataset rows (synthetic mode)");
    ceval->add_option("--dims", ev.dims, "attributes (synthetic mode)");
    ceval->add_option("--predicates", ev.predicates, "predicates per query (synthetic mode)");
    ceval->add_option("--queries", ev.queries, "queries (synthetic mode)");
    ceval->add_option("--seed", ev.seed, "rng seed")->envname("MLAQP_SEED");
    ceval->add_option("--selectivity", ev.selectivity, "target selectivity (synthetic mode)");
    ceval->add_option("--afs", ev.afs, "aggregates (synthetic mode)");
    ceval->add_option("--json", ev.json_out, "also write the report as JSON");
    ceval->add_flag("--curves", ev.curves, "error-vs-training-size curves");
    ceval->add_flag("--ensemble", ev.ensemble, "evaluate the cluster ensemble too");

    std::string serve_cat, serve_bind = "127.0.0.1";
    int serve_port = 8080;
    auto* cserve = app.add_subcommand("serve", "HTTP prediction service over a catalogue");
    cserve->add_option("--catalogue", serve_cat, "catalogue directory")
        ->required()
        ->envname("MLAQP_CATALOGUE");
    cserve->add_option("--bind", serve_bind, "bind address")->envname("MLAQP_BIND");
    cserve->add_option("--port", serve_port, "tcp port")->envname("MLAQP_PORT");

    std::string repl_cat, repl_af;
    auto* crepl = app.add_subcommand("repl", "interactive prediction shell");
    crepl->add_option("--catalogue", repl_cat, "catalogue directory")
        ->required()
        ->envname("MLAQP_CATALOGUE");
    crepl->add_option("--af", repl_af, "aggregate whose answers feed the drift monitor");

    MonitorArgs mon;
    auto* cmon = app.add_subcommand("monitor", "tail a query log and emit drift events as JSON");
    cmon->add_option("--catalogue", mon.catalogue, "catalogue directory")
        ->required()
        ->envname("MLAQP_CATALOGUE");
    cmon->add_option("--log", mon.log, "query log to tail")->required();
    cmon->add_option("--af", mon.af, "aggregate whose answers are tested");
    cmon->add_option("--alpha", mon.alpha, "KS significance level");
    cmon->add_option("--window", mon.window, "sliding-window size");
    cmon->add_option("--poll-ms", mon.poll_ms, "tail polling interval");
    cmon->add_flag("--once", mon.once, "process the existing log and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cgen->parsed()) return run_gen(gen);
        if (ctrain->parsed()) return run_train(train);
        if (ceval->parsed()) return run_eval(ev);
        if (cserve->parsed()) return run_serve(serve_cat, serve_bind, serve_port);
        if (crepl->parsed()) return run_repl(repl_cat, repl_af);
        if (cmon->parsed()) return run_monitor(mon);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
