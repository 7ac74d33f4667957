#include "mlaqp/catalogue.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

namespace mlaqp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_to_json(const std::vector<double>& v) {
    json arr = json::array();
    for (double x : v) {
        if (is_missing(x))
            arr.push_back(nullptr); // explicit missing marker
        else
            arr.push_back(x);
    }
    return arr;
}

std::vector<double> vec_from_json(const json& arr) {
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) v.push_back(x.is_null() ? missing_value() : x.get<double>());
    return v;
}

json schema_to_json(const DatasetSchema& s) {
    json j;
    j["name"] = s.name;
    j["attributes"] = json::array();
    for (const auto& a : s.attributes) {
        json ja;
        ja["name"] = a.name;
        ja["kind"] = a.kind == AttrKind::numeric ? "numeric" : "categorical";
        if (a.cardinality) ja["cardinality"] = *a.cardinality;
        j["attributes"].push_back(ja);
    }
    return j;
}

DatasetSchema schema_from_json(const json& j) {
    DatasetSchema s;
    s.name = j.at("name").get<std::string>();
    for (const auto& ja : j.at("attributes")) {
        Attribute a;
        a.name = ja.at("name").get<std::string>();
        a.kind = ja.at("kind").get<std::string>() == "categorical" ? AttrKind::categorical
                                                                   : AttrKind::numeric;
        if (ja.contains("cardinality")) a.cardinality = ja.at("cardinality").get<std::size_t>();
        s.attributes.push_back(std::move(a));
    }
    return s;
}

json encoder_to_json(const CategoricalEncoder& enc) {
    json j;
    j["cardinality_threshold"] = enc.cardinality_threshold();
    j["dummy_values"] = json::object();
    for (const auto& [attr, values] : enc.dummy_values()) j["dummy_values"][attr] = values;
    return j;
}

CategoricalEncoder encoder_from_json(const json& j, const DatasetSchema& schema) {
    CategoricalEncoder enc(j.at("cardinality_threshold").get<std::size_t>());
    for (const auto& [attr, values] : j.at("dummy_values").items()) {
        auto idx = schema.index_of(attr);
        if (!idx) throw corrupt_entry("encoder references unknown attribute '" + attr + "'");
        enc.fit_attribute(schema.at(*idx), values.get<std::vector<std::string>>());
    }
    return enc;
}

// trees as flat node arrays
json tree_to_json(const RegressionTree& t) {
    json leaf = json::array(), value = json::array(), feature = json::array(),
         threshold = json::array(), default_left = json::array(), left = json::array(),
         right = json::array();
    for (const auto& n : t.nodes) {
        leaf.push_back(n.leaf);
        value.push_back(n.value);
        feature.push_back(n.split_feature);
        threshold.push_back(n.split_threshold);
        default_left.push_back(n.default_left);
        left.push_back(n.left);
        right.push_back(n.right);
    }
    return json{{"leaf", leaf},       {"value", value},
                {"feature", feature}, {"threshold", threshold},
                {"default_left", default_left}, {"left", left}, {"right", right}};
}

RegressionTree tree_from_json(const json& j) {
    RegressionTree t;
    std::size_t n = j.at("leaf").size();
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node.leaf = j.at("leaf")[i].get<bool>();
        node.value = j.at("value")[i].get<double>();
        node.split_feature = j.at("feature")[i].get<std::size_t>();
        node.split_threshold = j.at("threshold")[i].get<double>();
        node.default_left = j.at("default_left")[i].get<bool>();
        node.left = j.at("left")[i].get<std::int32_t>();
        node.right = j.at("right")[i].get<std::int32_t>();
    }
    return t;
}

json loss_to_json(const Loss& l) {
    json j;
    j["kind"] = l.kind == Loss::Kind::squared ? "squared" : "pinball";
    if (l.kind == Loss::Kind::pinball) j["t"] = l.t;
    return j;
}

Loss loss_from_json(const json& j) {
    if (j.at("kind").get<std::string>() == "squared") return Loss::squared();
    return Loss::pinball(j.at("t").get<double>());
}

json model_to_json(const GbdtModel& m) {
    json j;
    j["base_score"] = m.base_score;
    j["learning_rate"] = m.learning_rate;
    j["feature_width"] = m.feature_width;
    j["loss"] = loss_to_json(m.loss);
    j["trees"] = json::array();
    for (const auto& t : m.trees) j["trees"].push_back(tree_to_json(t));
    return j;
}

GbdtModel model_from_json(const json& j) {
    GbdtModel m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_width = j.at("feature_width").get<std::size_t>();
    m.loss = loss_from_json(j.at("loss"));
    for (const auto& jt : j.at("trees")) m.trees.push_back(tree_from_json(jt));
    return m;
}

json interval_to_json(const IntervalModel& m) {
    return json{{"t", m.t}, {"lo", model_to_json(m.lo)}, {"hi", model_to_json(m.hi)}};
}

IntervalModel interval_from_json(const json& j) {
    IntervalModel m;
    m.t = j.at("t").get<double>();
    m.lo = model_from_json(j.at("lo"));
    m.hi = model_from_json(j.at("hi"));
    return m;
}

json ensemble_to_json(const ClusterEnsemble& e) {
    json j;
    json reps = json::array();
    for (const auto& r : e.clusters.representatives()) reps.push_back(vec_to_json(r));
    j["representatives"] = reps;
    j["counts"] = e.clusters.counts();
    j["growth_threshold"] = e.clusters.growth_threshold();
    j["slot_mean"] = vec_to_json(e.clusters.slot_means());
    j["slot_count"] = e.clusters.slot_counts();
    j["generalization_error"] = e.generalization_error;
    j["local_models"] = json::array();
    for (const auto& m : e.local_models) j["local_models"].push_back(model_to_json(m));
    return j;
}

ClusterEnsemble ensemble_from_json(const json& j) {
    std::vector<std::vector<double>> reps;
    for (const auto& r : j.at("representatives")) reps.push_back(vec_from_json(r));
    ClusterEnsemble e;
    e.clusters = ClusterSet::restore(std::move(reps),
                                     j.at("counts").get<std::vector<std::size_t>>(),
                                     j.at("growth_threshold").get<double>(),
                                     vec_from_json(j.at("slot_mean")),
                                     j.at("slot_count").get<std::vector<std::size_t>>());
    e.generalization_error = j.at("generalization_error").get<std::vector<double>>();
    for (const auto& jm : j.at("local_models")) e.local_models.push_back(model_from_json(jm));
    return e;
}

json drift_to_json(const ModelCatalogue& cat) {
    json j;
    j["answers"] = json::object();
    for (const auto& [key, ecdf] : cat.answer_ecdfs) j["answers"][key] = ecdf.sample();
    if (cat.workload_stats) {
        const WorkloadStats& w = *cat.workload_stats;
        json jw;
        jw["dimension"] = w.dimension();
        jw["count"] = w.count();
        jw["mean"] = w.mean();
        jw["covariance"] = w.covariance();
        jw["slot_mean"] = w.slot_means();
        j["workload"] = jw;
    }
    return j;
}

void drift_from_json(const json& j, ModelCatalogue& cat) {
    for (const auto& [key, sample] : j.at("answers").items())
        cat.answer_ecdfs.emplace(key, AnswerEcdf(sample.get<std::vector<double>>()));
    if (j.contains("workload")) {
        const json& jw = j.at("workload");
        auto dim = jw.at("dimension").get<std::size_t>();
        cat.workload_stats = WorkloadStats::restore(
            dim, jw.at("count").get<std::size_t>(), jw.at("mean").get<std::vector<double>>(),
            jw.at("covariance").get<std::vector<double>>(),
            jw.at("slot_mean").get<std::vector<double>>(), std::vector<std::size_t>(dim, 0));
    }
}

std::uint32_t crc_of(const std::string& data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(
        crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

void write_file(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << data;
    if (!out) throw io_error("short write to " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json groupby_to_json(const GroupByCatalogue& cat) {
    json entries = json::array();
    for (const auto& [key, values] : cat.entries()) {
        json e;
        e["key"] = key;
        e["values"] = values;
        entries.push_back(e);
    }
    return json{{"entries", entries}};
}

GroupByCatalogue groupby_from_json(const json& j) {
    GroupByCatalogue cat;
    for (const auto& e : j.at("entries"))
        cat.put(e.at("key").get<std::vector<std::string>>(),
                e.at("values").get<std::vector<std::vector<std::string>>>());
    return cat;
}

} // namespace

std::string ModelCatalogue::fingerprint() const {
    std::string blob = schema_to_json(schema).dump() + encoder_to_json(encoder).dump();
    std::uint64_t h = stable_hash64(blob);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::size_t ModelCatalogue::feature_width() const {
    return VectorLayout(schema, encoder).width();
}

void save(const ModelCatalogue& cat, const std::string& dir) {
    std::size_t width = cat.feature_width();
    for (const auto& [key, entry] : cat.entries)
        if (entry.point.feature_width != width)
            throw error("entry '" + key + "' width does not match the schema/encoder layout");

    fs::path target(dir);
    fs::path tmp = target;
    tmp += ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);

    json manifest;
    manifest["format_version"] = ModelCatalogue::kFormatVersion;
    manifest["fingerprint"] = cat.fingerprint();
    manifest["schema"] = schema_to_json(cat.schema);
    manifest["entries"] = json::array();

    std::size_t i = 0;
    for (const auto& [key, entry] : cat.entries) {
        json je;
        je["key"] = key;
        je["point"] = model_to_json(entry.point);
        if (entry.interval) je["interval"] = interval_to_json(*entry.interval);
        if (entry.ensemble) je["ensemble"] = ensemble_to_json(*entry.ensemble);
        std::string file = "model_" + std::to_string(i++) + ".json";
        std::string data = je.dump();
        write_file(tmp / file, data);
        manifest["entries"].push_back(json{{"key", key}, {"file", file}, {"crc32", crc_of(data)}});
    }

    auto aux = [&](const std::string& name, const json& j) {
        std::string data = j.dump();
        write_file(tmp / name, data);
        manifest["files"][name] = crc_of(data);
    };
    aux("encoder.json", encoder_to_json(cat.encoder));
    aux("groupby_catalogue.json", groupby_to_json(cat.groupby));
    aux("drift.json", drift_to_json(cat));

    write_file(tmp / "manifest.json", manifest.dump(2));

    fs::remove_all(target, ec);
    fs::rename(tmp, target);
}

ModelCatalogue load(const std::string& dir) {
    fs::path base(dir);
    if (!fs::exists(base / "manifest.json"))
        throw missing_manifest("no manifest.json in " + dir);
    json manifest = json::parse(read_file(base / "manifest.json"));
    int version = manifest.at("format_version").get<int>();
    if (version != ModelCatalogue::kFormatVersion)
        throw version_mismatch("catalogue format version " + std::to_string(version) +
                               ", expected " + std::to_string(ModelCatalogue::kFormatVersion));

    ModelCatalogue cat;
    cat.schema = schema_from_json(manifest.at("schema"));
    cat.schema.validate();

    auto read_checked = [&](const std::string& name, std::uint32_t expect) {
        std::string data = read_file(base / name);
        if (crc_of(data) != expect)
            throw corrupt_entry("checksum mismatch in " + name);
        return data;
    };

    const json& files = manifest.at("files");
    cat.encoder = encoder_from_json(
        json::parse(read_checked("encoder.json", files.at("encoder.json").get<std::uint32_t>())),
        cat.schema);
    cat.groupby = groupby_from_json(json::parse(read_checked(
        "groupby_catalogue.json", files.at("groupby_catalogue.json").get<std::uint32_t>())));
    drift_from_json(
        json::parse(read_checked("drift.json", files.at("drift.json").get<std::uint32_t>())), cat);

    for (const auto& je : manifest.at("entries")) {
        std::string key = je.at("key").get<std::string>();
        std::string file = je.at("file").get<std::string>();
        std::string data;
        try {
            data = read_checked(file, je.at("crc32").get<std::uint32_t>());
        } catch (const io_error&) {
            throw corrupt_entry("entry '" + key + "': missing file " + file);
        } catch (const corrupt_entry&) {
            throw corrupt_entry("entry '" + key + "': checksum mismatch in " + file);
        }
        json jm = json::parse(data, nullptr, false);
        if (jm.is_discarded()) throw corrupt_entry("entry '" + key + "': unparseable " + file);
        ModelCatalogue::Entry entry;
        entry.point = model_from_json(jm.at("point"));
        if (jm.contains("interval")) entry.interval = interval_from_json(jm.at("interval"));
        if (jm.contains("ensemble")) entry.ensemble = ensemble_from_json(jm.at("ensemble"));
        cat.entries.emplace(std::move(key), std::move(entry));
    }

    std::string expect_fp = manifest.at("fingerprint").get<std::string>();
    if (cat.fingerprint() != expect_fp)
        throw corrupt_entry("schema/encoder fingerprint mismatch");
    return cat;
}

std::uintmax_t catalogue_bytes(const std::string& dir) {
    std::uintmax_t total = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) total += e.file_size();
    return total;
}

} // namespace mlaqp
