#pragma once

#include "mlaqp/gbdt.hpp"

namespace mlaqp {

// Quantile model pair at levels t/2 and 1-t/2; nominal coverage 1-t.
struct IntervalModel {
    GbdtModel lo; // pinball t/2
    GbdtModel hi; // pinball 1-t/2
    double t = 0.1;

    double nominal_coverage() const { return 1.0 - t; }
};

struct PredictionInterval {
    double low = 0.0;
    double high = 0.0;
    double nominal_coverage = 0.0;
    bool crossed = false; // quantile crossing was clamped by min/max swap
};

IntervalModel fit_interval(const TrainingSet& train, double t, const GbdtConfig& cfg);
IntervalModel fit_interval(const TrainMatrix& data, double t, const GbdtConfig& cfg);

PredictionInterval interval(const IntervalModel& model, const MetaVector& m);

struct empty_holdout : error {
    using error::error;
};

// Fraction of held-out answers inside their predicted intervals.
double coverage_ratio(const IntervalModel& model, const TrainingSet& heldout);

} // namespace mlaqp
