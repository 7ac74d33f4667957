#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mlaqp {

// Unconstrained meta-vector slots carry NaN in memory; serialized form uses
// an explicit null marker. Zero is a legal bound value and never means missing.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : error {
    using error::error;
};

} // namespace mlaqp
