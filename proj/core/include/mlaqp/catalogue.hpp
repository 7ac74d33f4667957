#pragma once

#include <map>
#include <optional>
#include <string>

#include "mlaqp/cluster.hpp"
#include "mlaqp/drift.hpp"
#include "mlaqp/gbdt.hpp"
#include "mlaqp/intervals.hpp"
#include "mlaqp/vectorizer.hpp"

namespace mlaqp {

struct version_mismatch : error {
    using error::error;
};
struct corrupt_entry : error {
    using error::error;
};
struct missing_manifest : error {
    using error::error;
};

// Everything Prediction mode needs: per-AF models, the GROUP-BY catalogue,
// the encoder state, and the drift-monitor training snapshots.
struct ModelCatalogue {
    static constexpr int kFormatVersion = 1;

    struct Entry {
        GbdtModel point;
        std::optional<IntervalModel> interval;
        std::optional<ClusterEnsemble> ensemble;
    };

    DatasetSchema schema;
    CategoricalEncoder encoder;
    GroupByCatalogue groupby;
    std::map<std::string, Entry> entries; // key: "AF(attr)"

    // drift-monitor training snapshots
    std::map<std::string, AnswerEcdf> answer_ecdfs;
    std::optional<WorkloadStats> workload_stats;

    // hash of the schema + encoder state used at training
    std::string fingerprint() const;
    std::size_t feature_width() const;
};

// Directory layout: manifest.json (version, fingerprint, entry index with
// per-file CRC32), one model_<i>.json per entry, encoder.json,
// groupby_catalogue.json, drift.json. Writes go to a temp dir first and the
// final rename is atomic.
void save(const ModelCatalogue& cat, const std::string& dir);
ModelCatalogue load(const std::string& dir);

// Recursive on-disk size of a saved catalogue directory, in bytes.
std::uintmax_t catalogue_bytes(const std::string& dir);

} // namespace mlaqp
