#include <doctest.h>

#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mlaqp/eval.hpp"
#include "service.hpp"

using namespace mlaqp;
using nlohmann::json;

namespace {

ModelCatalogue service_catalogue() {
    DatasetSchema schema;
    schema.name = "t";
    schema.attributes = {{"a1", AttrKind::numeric, {}}, {"a2", AttrKind::numeric, {}}};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::map<std::string, TrainingSet> per_af;
    for (const std::string key : {"COUNT(*)", "AVG(a1)"}) {
        TrainingSet ts;
        ts.af = *aggregate_spec_from_key(key);
        for (int i = 0; i < 200; ++i) {
            MetaVector m(4);
            m.values[0] = u(rng);
            m.values[1] = m.values[0] + u(rng) * 0.2;
            ts.pairs.push_back({m, ts.af, 2.0 * m.values[0] + 1.0});
        }
        per_af.emplace(key, std::move(ts));
    }
    EvalConfig cfg;
    cfg.point_cfg.rounds = 50;
    cfg.point_cfg.min_samples_leaf = 5;
    cfg.quantile_cfg.rounds = 50;
    cfg.quantile_cfg.learning_rate = 0.05;
    return build_catalogue(per_af, schema, CategoricalEncoder{}, cfg);
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("predictor answers SQL through the catalogue models") {
    Predictor predictor{service_catalogue()};
    auto answer = predictor.answer_sql("SELECT COUNT(*), AVG(a1) FROM t WHERE a1 BETWEEN 10 AND 30");
    REQUIRE(answer.answers.size() == 2);
    CHECK(answer.answers[0].model_id == "COUNT(*)");
    CHECK(answer.answers[1].model_id == "AVG(a1)");
    for (const auto& a : answer.answers) {
        REQUIRE(a.interval.has_value());
        CHECK(a.interval->low <= a.interval->high);
        CHECK(a.interval->nominal_coverage == doctest::Approx(0.9));
    }
    CHECK(answer.latency_micros > 0);
    // the estimate is exactly the stored point model's prediction
    const auto& cat = predictor.catalogue();
    CHECK(answer.answers[0].estimate == cat.entries.at("COUNT(*)").point.predict(answer.meta));
}

TEST_CASE("predictor rejects unknown aggregates, naming the known ones") {
    Predictor predictor{service_catalogue()};
    try {
        predictor.answer_sql("SELECT SUM(a1) FROM t WHERE a1 >= 1");
        FAIL("expected error");
    } catch (const error& e) {
        std::string msg = e.what();
        CHECK(msg.find("SUM(a1)") != std::string::npos);
        CHECK(msg.find("COUNT(*)") != std::string::npos); // lists what is available
    }
}

TEST_CASE("extracted-slot requests bypass the parser") {
    Predictor predictor{service_catalogue()};
    auto answer = predictor.answer_extracted("AVG(a1)", {{0, 10.0}, {1, 30.0}});
    REQUIRE(answer.answers.size() == 1);
    MetaVector m(4);
    m.values[0] = 10.0;
    m.values[1] = 30.0;
    CHECK(answer.answers[0].estimate ==
          predictor.catalogue().entries.at("AVG(a1)").point.predict(m));
    CHECK_THROWS_AS(predictor.answer_extracted("AVG(a1)", {{9, 1.0}}), width_mismatch);
}

TEST_CASE("http endpoints: health, catalogue, predict, error codes") {
    auto predictor = std::make_shared<const Predictor>(service_catalogue());
    PredictionServer server(predictor, "127.0.0.1", 0); // ephemeral port
    std::thread t([&] { server.start(); });
    REQUIRE(server.wait_until_ready());
    httplib::Client client("127.0.0.1", server.port());

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body).at("status") == "ok");

    auto cat = client.Get("/catalogue");
    REQUIRE(cat);
    CHECK(cat->status == 200);
    auto jcat = json::parse(cat->body);
    CHECK(jcat.at("entries").size() == 2);
    CHECK(jcat.at("feature_width") == 4);

    auto ok = client.Post("/predict",
                          R"({"sql":"SELECT AVG(a1) FROM t WHERE a1 BETWEEN 5 AND 20"})",
                          "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    auto jok = json::parse(ok->body);
    CHECK(jok.contains("estimate"));
    CHECK(jok.at("model_id") == "AVG(a1)");
    CHECK(jok.at("interval").at("nominal_coverage") == doctest::Approx(0.9));

    auto extracted = client.Post(
        "/predict", R"x({"extracted":{"af":"COUNT(*)","meta":{"0":5.0,"1":20.0}}})x",
        "application/json");
    REQUIRE(extracted);
    CHECK(extracted->status == 200);

    auto bad_json = client.Post("/predict", "{not json", "application/json");
    REQUIRE(bad_json);
    CHECK(bad_json->status == 400);

    auto bad_sql = client.Post("/predict", R"({"sql":"DELETE FROM t"})", "application/json");
    REQUIRE(bad_sql);
    CHECK(bad_sql->status == 400);

    auto unknown_af = client.Post("/predict", R"({"sql":"SELECT MIN(a2) FROM t"})",
                                  "application/json");
    REQUIRE(unknown_af);
    CHECK(unknown_af->status == 400);
    CHECK(json::parse(unknown_af->body).at("error").get<std::string>().find("COUNT(*)") !=
          std::string::npos);

    auto wrong_width = client.Post(
        "/predict", R"x({"extracted":{"af":"AVG(a1)","meta":{"77":1.0}}})x", "application/json");
    REQUIRE(wrong_width);
    CHECK(wrong_width->status == 422);

    auto both = client.Post("/predict", R"({"sql":"x","extracted":{}})", "application/json");
    REQUIRE(both);
    CHECK(both->status == 400);

    server.stop();
    t.join();
}

} // TEST_SUITE
