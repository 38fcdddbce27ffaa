#pragma once

#include <algorithm>
#include <cmath>

namespace tnfcm {

/// Margin ranking term max(0, d_pos - d_neg + margin).
inline double hinge_term(double d_pos, double d_neg, double margin) { return std::max(0.0, d_pos - d_neg + margin); }

inline bool hinge_active(double d_pos, double d_neg, double margin) { return d_pos - d_neg + margin > 0.0; }

struct LossValue {
    double loss = 0.0;
    double grad = 0.0;  // derivative w.r.t. the scalar input
};

/// Contrastive criterion on a squared distance d:
///   positive: d
///   negative: max(0, m - sqrt(d))^2
/// The derivative at d = 0 for negatives is taken as 0.
inline LossValue contrastive_loss(double d, bool is_positive, double margin = 1.0) {
    if (is_positive) return {d, 1.0};
    const double root = std::sqrt(std::max(d, 0.0));
    const double gap = margin - root;
    if (gap <= 0.0) return {0.0, 0.0};
    const double grad = root > 0.0 ? -gap / root : 0.0;
    return {gap * gap, grad};
}

/// Numerically safe log(1 + exp(t)).
inline double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

struct BprValue {
    double loss = 0.0;
    double grad_pos = 0.0;  // d loss / d s_pos
    double grad_neg = 0.0;  // d loss / d s_neg
};

/// Soft-margin pairwise loss softplus(-(s_pos - s_neg)).
inline BprValue bpr_loss(double s_pos, double s_neg) {
    const double diff = s_pos - s_neg;
    const double g = sigmoid(-diff);
    return {softplus(-diff), -g, g};
}

}  // namespace tnfcm
