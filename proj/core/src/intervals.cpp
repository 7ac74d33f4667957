#include "mlaqp/intervals.hpp"

#include <algorithm>

namespace mlaqp {

IntervalModel fit_interval(const TrainMatrix& data, double t, const GbdtConfig& cfg) {
    if (!(t > 0.0 && t < 1.0)) throw error("interval level t must lie strictly inside (0,1)");
    IntervalModel model;
    model.t = t;
    model.lo = fit(data, cfg, Loss::pinball(t / 2.0));
    model.hi = fit(data, cfg, Loss::pinball(1.0 - t / 2.0));
    return model;
}

IntervalModel fit_interval(const TrainingSet& train, double t, const GbdtConfig& cfg) {
    return fit_interval(to_matrix(train), t, cfg);
}

PredictionInterval interval(const IntervalModel& model, const MetaVector& m) {
    double lo = model.lo.predict(m);
    double hi = model.hi.predict(m);
    PredictionInterval out;
    out.crossed = lo > hi;
    out.low = std::min(lo, hi);
    out.high = std::max(lo, hi);
    out.nominal_coverage = model.nominal_coverage();
    return out;
}

double coverage_ratio(const IntervalModel& model, const TrainingSet& heldout) {
    if (heldout.pairs.empty()) throw empty_holdout("coverage_ratio over an empty holdout");
    std::size_t inside = 0;
    for (const auto& pair : heldout.pairs) {
        PredictionInterval pi = interval(model, pair.meta);
        if (pair.answer >= pi.low && pair.answer <= pi.high) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(heldout.pairs.size());
}

} // namespace mlaqp
