#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "mlaqp/catalogue.hpp"
#include "mlaqp/eval.hpp"

namespace mlaqp {

// Answers prediction requests against an immutable loaded catalogue. Serving
// never touches base data; everything needed lives in the catalogue.
class Predictor {
public:
    explicit Predictor(ModelCatalogue cat);

    struct AfAnswer {
        std::string model_id; // catalogue key
        double estimate = 0.0;
        std::optional<PredictionInterval> interval;
    };
    struct GroupAnswer {
        std::vector<std::string> key;
        std::vector<AfAnswer> answers;
    };
    struct Answer {
        std::vector<AfAnswer> answers;      // SPA path
        std::vector<GroupAnswer> groups;    // GROUP-BY path
        double latency_micros = 0.0;
        MetaVector meta;                    // vector behind the first answer
    };

    Answer answer_sql(const std::string& sql) const;
    Answer answer_extracted(const std::string& af_key,
                            const std::map<std::size_t, double>& slots) const;

    const ModelCatalogue& catalogue() const { return cat_; }
    std::size_t feature_width() const { return width_; }

private:
    AfAnswer answer_one(const std::string& key, const MetaVector& meta) const;

    ModelCatalogue cat_;
    std::size_t width_;
};

// POST /predict, GET /health, GET /catalogue. Blocks until stop() is called
// from another thread (or forever under the CLI).
class PredictionServer {
public:
    PredictionServer(std::shared_ptr<const Predictor> predictor, std::string host, int port);
    ~PredictionServer();

    bool start();          // blocking
    bool wait_until_ready(int timeout_ms = 5000);
    void stop();
    int port() const { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string host_;
    int port_;
};

// request/response JSON bodies (shared by the server and the repl)
std::string predict_request_to_json(const std::string& sql);
std::string answer_to_json(const Predictor::Answer& answer);

} // namespace mlaqp
