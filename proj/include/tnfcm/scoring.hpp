#pragma once

#include <span>

#include "tnfcm/linalg.hpp"

namespace tnfcm {

/// Expansion of the translation distance |x + r - y|^2:
///   total = norms - 2 * global - 2 * category
struct ScoreBreakdown {
    double total_distance = 0.0;
    double global_term = 0.0;    // x.y
    double category_term = 0.0;  // (y - x).r
    double norm_terms = 0.0;     // |x|^2 + |y|^2 + |r|^2
};

inline ScoreBreakdown dist_transnfcm(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> r) {
    require_same_size(x.size(), y.size(), "dist_transnfcm x/y");
    require_same_size(x.size(), r.size(), "dist_transnfcm x/r");
    ScoreBreakdown s;
    double xx = 0.0, yy = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] + r[i] - y[i];
        s.total_distance += diff * diff;
        s.global_term += x[i] * y[i];
        s.category_term += (y[i] - x[i]) * r[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
        rr += r[i] * r[i];
    }
    s.norm_terms = xx + yy + rr;
    return s;
}

/// Inner-product compatibility (higher is more compatible).
inline double score_inner(std::span<const double> x, std::span<const double> y) { return dot(x, y); }

/// Squared Euclidean distance.
inline double dist_euclid(std::span<const double> x, std::span<const double> y) {
    require_same_size(x.size(), y.size(), "dist_euclid");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

/// Squared distance inside the subspace gated by a per-pair mask.
inline double dist_csn(std::span<const double> x, std::span<const double> y, std::span<const double> mask) {
    require_same_size(x.size(), y.size(), "dist_csn x/y");
    require_same_size(x.size(), mask.size(), "dist_csn mask");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = (x[i] - y[i]) * mask[i];
        s += d * d;
    }
    return s;
}

}  // namespace tnfcm
