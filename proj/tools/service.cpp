#include "service.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mlaqp/parser.hpp"
#include "mlaqp/vectorizer.hpp"

namespace mlaqp {

using nlohmann::json;

Predictor::Predictor(ModelCatalogue cat)
    : cat_(std::move(cat)), width_(cat_.feature_width()) {}

Predictor::AfAnswer Predictor::answer_one(const std::string& key, const MetaVector& meta) const {
    auto it = cat_.entries.find(key);
    if (it == cat_.entries.end()) {
        std::string known;
        for (const auto& [k, _] : cat_.entries) known += (known.empty() ? "" : ", ") + k;
        throw error("no model for '" + key + "'; known: " + known);
    }
    if (meta.width() != it->second.point.feature_width)
        throw width_mismatch("meta width " + std::to_string(meta.width()) +
                             " != model width " +
                             std::to_string(it->second.point.feature_width));
    AfAnswer out;
    out.model_id = key;
    out.estimate = it->second.ensemble ? it->second.ensemble->predict(meta)
                                       : it->second.point.predict(meta);
    if (it->second.interval) out.interval = interval(*it->second.interval, meta);
    return out;
}

Predictor::Answer Predictor::answer_sql(const std::string& sql) const {
    auto t0 = std::chrono::steady_clock::now();
    Answer out;
    ParsedQuery q = parse(sql, cat_.schema);
    if (q.group_by.empty()) {
        MetaVector meta = vectorize_spa(q, cat_.schema, cat_.encoder).meta;
        out.meta = meta;
        for (const auto& af : q.aggregates) out.answers.push_back(answer_one(af.key(), meta));
    } else {
        auto rows = expand_group_by(q, cat_.groupby, cat_.schema, cat_.encoder);
        for (const auto& row : rows) {
            GroupAnswer g;
            g.key = row.group_values;
            for (const auto& af : q.aggregates)
                g.answers.push_back(answer_one(af.key(), row.meta));
            out.groups.push_back(std::move(g));
        }
        if (!rows.empty()) out.meta = rows.front().meta;
    }
    out.latency_micros =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Predictor::Answer Predictor::answer_extracted(const std::string& af_key,
                                              const std::map<std::size_t, double>& slots) const {
    auto t0 = std::chrono::steady_clock::now();
    MetaVector meta(width_);
    for (const auto& [slot, value] : slots) {
        if (slot >= width_)
            throw width_mismatch("slot " + std::to_string(slot) + " out of range for width " +
                                 std::to_string(width_));
        meta.values[slot] = value;
    }
    Answer out;
    out.meta = meta;
    out.answers.push_back(answer_one(af_key, meta));
    out.latency_micros =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string predict_request_to_json(const std::string& sql) {
    return json{{"sql", sql}}.dump();
}

namespace {

json af_answer_to_json(const Predictor::AfAnswer& a) {
    json j;
    j["model_id"] = a.model_id;
    j["estimate"] = a.estimate;
    if (a.interval) {
        j["interval"] = {{"low", a.interval->low},
                         {"high", a.interval->high},
                         {"nominal_coverage", a.interval->nominal_coverage}};
    }
    return j;
}

} // namespace

std::string answer_to_json(const Predictor::Answer& answer) {
    json j;
    if (!answer.answers.empty()) {
        // top-level fields mirror the first aggregate; the rest ride along
        j["estimate"] = answer.answers.front().estimate;
        j["model_id"] = answer.answers.front().model_id;
        if (answer.answers.front().interval) {
            const auto& pi = *answer.answers.front().interval;
            j["interval"] = {{"low", pi.low},
                            {"high", pi.high},
                            {"nominal_coverage", pi.nominal_coverage}};
        }
        if (answer.answers.size() > 1) {
            j["results"] = json::array();
            for (const auto& a : answer.answers) j["results"].push_back(af_answer_to_json(a));
        }
    }
    if (!answer.groups.empty()) {
        j["groups"] = json::array();
        for (const auto& g : answer.groups) {
            json jg;
            jg["key"] = g.key;
            jg["results"] = json::array();
            for (const auto& a : g.answers) jg["results"].push_back(af_answer_to_json(a));
            j["groups"].push_back(jg);
        }
    }
    j["latency_micros"] = answer.latency_micros;
    return j.dump();
}

struct PredictionServer::Impl {
    httplib::Server server;
    std::shared_ptr<const Predictor> predictor;
    std::atomic<bool> ready{false};
};

PredictionServer::PredictionServer(std::shared_ptr<const Predictor> predictor, std::string host,
                                   int port)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)), port_(port) {
    impl_->predictor = std::move(predictor);
    httplib::Server& s = impl_->server;

    s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        if (!impl_->ready.load()) {
            res.status = 503;
            res.set_content(R"({"status":"loading"})", "application/json");
            return;
        }
        res.set_content(R"({"status":"ok"})", "application/json");
    });

    s.Get("/catalogue", [this](const httplib::Request&, httplib::Response& res) {
        json j;
        j["entries"] = json::array();
        for (const auto& [key, entry] : impl_->predictor->catalogue().entries) {
            j["entries"].push_back({{"key", key},
                                    {"trees", entry.point.trees.size()},
                                    {"has_interval", entry.interval.has_value()},
                                    {"has_ensemble", entry.ensemble.has_value()}});
        }
        j["feature_width"] = impl_->predictor->feature_width();
        res.set_content(j.dump(), "application/json");
    });

    s.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(R"({"error":"malformed JSON body"})", "application/json");
            return;
        }
        bool has_sql = body.contains("sql");
        bool has_extracted = body.contains("extracted");
        if (has_sql == has_extracted) {
            res.status = 400;
            res.set_content(R"({"error":"exactly one of sql / extracted required"})",
                            "application/json");
            return;
        }
        try {
            Predictor::Answer answer;
            if (has_sql) {
                answer = impl_->predictor->answer_sql(body.at("sql").get<std::string>());
            } else {
                const json& ex = body.at("extracted");
                std::map<std::size_t, double> slots;
                for (const auto& [k, v] : ex.at("meta").items())
                    slots[static_cast<std::size_t>(std::stoul(k))] = v.get<double>();
                answer = impl_->predictor->answer_extracted(ex.at("af").get<std::string>(), slots);
            }
            res.set_content(answer_to_json(answer), "application/json");
        } catch (const width_mismatch& e) {
            res.status = 422;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
}

PredictionServer::~PredictionServer() { stop(); }

bool PredictionServer::start() {
    if (port_ == 0) {
        port_ = impl_->server.bind_to_any_port(host_);
        if (port_ < 0) return false;
        impl_->ready.store(true);
        return impl_->server.listen_after_bind();
    }
    if (!impl_->server.bind_to_port(host_, port_)) return false;
    impl_->ready.store(true);
    return impl_->server.listen_after_bind();
}

bool PredictionServer::wait_until_ready(int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        if (impl_->ready.load() && impl_->server.is_running()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
}

void PredictionServer::stop() {
    if (impl_) impl_->server.stop();
}

} // namespace mlaqp
