#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tnfcm/corpus.hpp"
#include "tnfcm/encoder.hpp"
#include "tnfcm/losses.hpp"
#include "tnfcm/model.hpp"
#include "tnfcm/random.hpp"
#include "tnfcm/sampling.hpp"

namespace tnfcm {

/// Deterministic dropout masks keyed by (seed, epoch, batch, tuple, slot, modality).
struct DropoutPlan {
    double rate = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;
    std::uint64_t batch = 0;

    std::vector<double> mask(std::size_t tuple, std::size_t slot, std::size_t modality, std::size_t dim) const {
        if (rate <= 0.0) return {};
        Rng rng = make_rng(seed, "dropout", {epoch, batch, tuple, slot, modality});
        return dropout_mask(dim, rate, rng);
    }
};

/// Gradients of one tuple's loss w.r.t. the embeddings it touches.
struct TupleGradients {
    double loss = 0.0;
    bool active = false;
    std::vector<double> head, tail, corrupted;  // embedding gradients
    std::vector<double> relation;               // w.r.t. the canonical row of the positive relation
    std::vector<double> corrupted_relation;     // w.r.t. the canonical row of the corrupted relation
};

/// Translation-distance hinge for one 5-tuple with relation vectors given
/// as stored (unsigned) rows plus their lookup signs.
///   delta+ = 2 (x + r - y),  delta- = 2 (x' + r' - y')
///   active: x += d+, y -= d+, r += d+;  x' -= d-, y' += d-, r' -= d-
/// The shared uncorrupted item accumulates both sides; relation
/// gradients are mapped back to the stored row through the sign.
inline TupleGradients tuple_gradients(const FiveTuple& t, std::span<const double> head, std::span<const double> tail,
                                      std::span<const double> corrupted, std::span<const double> rel_row,
                                      std::span<const double> corrupted_rel_row, double margin) {
    const std::size_t n = head.size();
    TupleGradients g;
    g.head.assign(n, 0.0);
    g.tail.assign(n, 0.0);
    g.corrupted.assign(n, 0.0);
    g.relation.assign(n, 0.0);
    g.corrupted_relation.assign(n, 0.0);

    const bool tail_side = t.side == CorruptSide::tail;
    std::span<const double> nh = tail_side ? head : corrupted;
    std::span<const double> nt = tail_side ? corrupted : tail;
    std::vector<double> dpos(n), dneg(n);
    double d_pos = 0.0, d_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dpos[i] = head[i] + t.relation.sign * rel_row[i] - tail[i];
        dneg[i] = nh[i] + t.corrupted_relation.sign * corrupted_rel_row[i] - nt[i];
        d_pos += dpos[i] * dpos[i];
        d_neg += dneg[i] * dneg[i];
    }
    g.loss = hinge_term(d_pos, d_neg, margin);
    g.active = hinge_active(d_pos, d_neg, margin);
    if (!g.active) return g;

    std::vector<double>& g_nh = tail_side ? g.head : g.corrupted;
    std::vector<double>& g_nt = tail_side ? g.corrupted : g.tail;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = 2.0 * dpos[i];
        const double q = 2.0 * dneg[i];
        g.head[i] += p;
        g.tail[i] -= p;
        g.relation[i] = t.relation.sign * p;
        g_nh[i] -= q;
        g_nt[i] += q;
        g.corrupted_relation[i] = -t.corrupted_relation.sign * q;
    }
    return g;
}

struct BatchResult {
    double loss = 0.0;        // mean tuple loss plus any regularizer
    std::size_t active = 0;   // tuples whose loss is still violated
    std::size_t tuples = 0;
};

namespace detail {

struct SlotEncoding {
    std::vector<EncodeTrace> traces;  // one per modality
    std::vector<double> fused;
};

inline SlotEncoding encode_slot(const Model& model, const Corpus& corpus, std::size_t item, const DropoutPlan& plan,
                                std::size_t tuple, std::size_t slot) {
    SlotEncoding s;
    const auto& encs = model.params.encoders;
    s.traces.reserve(encs.size());
    for (std::size_t m = 0; m < encs.size(); ++m) {
        const auto mask = plan.mask(tuple, slot, m, encs[m].input_dim);
        s.traces.push_back(encode_traced(encs[m], corpus.features(item, encs[m].modality), mask));
        s.fused.insert(s.fused.end(), s.traces.back().output.begin(), s.traces.back().output.end());
    }
    return s;
}

inline void backprop_slot(const Model& model, const SlotEncoding& s, std::span<const double> grad, double scale,
                          Parameters& out) {
    const auto& encs = model.params.encoders;
    std::size_t offset = 0;
    std::vector<double> part;
    for (std::size_t m = 0; m < encs.size(); ++m) {
        const std::size_t d = encs[m].embed_dim;
        part.assign(grad.begin() + offset, grad.begin() + offset + d);
        bool any = false;
        for (double& v : part) {
            v *= scale;
            any = any || v != 0.0;
        }
        if (any) encode_backward(encs[m], s.traces[m], part, out.encoders[m]);
        offset += d;
    }
}

}  // namespace detail

/// Mean loss of a batch of 5-tuples under the model's criterion; when
/// `grad` is given (zero-initialized, shaped like the parameters) the
/// gradient of that mean is accumulated into it.
///
/// transnfcm, trinet, csn: margin ranking on their distance;
/// bpr: softplus(-(s_pos - s_neg)) on inner products;
/// sianet: contrastive loss on the positive and the corrupted pair.
/// csn adds csn_l1 * sum|w| over all masks.
inline BatchResult batch_objective(const Model& model, const Corpus& corpus, std::span<const FiveTuple> batch,
                                   const DropoutPlan& plan, Parameters* grad) {
    BatchResult result;
    result.tuples = batch.size();
    const TrainConfig& cfg = model.config;
    const std::size_t n = model.embedding_dim();
    const double scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    const std::vector<double> zeros(n, 0.0);

    for (std::size_t ti = 0; ti < batch.size(); ++ti) {
        const FiveTuple& t = batch[ti];
        const std::array<std::size_t, 3> items{t.head, t.tail, t.corrupted};
        std::array<detail::SlotEncoding, 3> enc;
        for (std::size_t s = 0; s < 3; ++s) enc[s] = detail::encode_slot(model, corpus, items[s], plan, ti, s);
        const auto& x = enc[0].fused;
        const auto& y = enc[1].fused;
        const auto& c = enc[2].fused;
        const bool tail_side = t.side == CorruptSide::tail;
        const auto& nh = tail_side ? x : c;
        const auto& nt = tail_side ? c : y;

        std::array<std::vector<double>, 3> g{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                                             std::vector<double>(n, 0.0)};
        auto& g_nh = tail_side ? g[0] : g[2];
        auto& g_nt = tail_side ? g[2] : g[1];
        double loss = 0.0;
        bool active = false;

        switch (cfg.kind) {
            case ModelKind::transnfcm: {
                const auto rp = model.params.relations.row(t.relation.row);
                const auto rn = model.params.relations.row(t.corrupted_relation.row);
                TupleGradients tg = tuple_gradients(t, x, y, c, rp, rn, cfg.margin);
                loss = tg.loss;
                active = tg.active;
                if (active && grad) {
                    g[0] = std::move(tg.head);
                    g[1] = std::move(tg.tail);
                    g[2] = std::move(tg.corrupted);
                    axpy(scale, tg.relation, grad->relations.row(t.relation.row));
                    axpy(scale, tg.corrupted_relation, grad->relations.row(t.corrupted_relation.row));
                }
                break;
            }
            case ModelKind::trinet: {
                const FiveTuple plain{t.head, t.tail, {0, 1.0, 0}, t.corrupted, {0, 1.0, 0}, t.side};
                TupleGradients tg = tuple_gradients(plain, x, y, c, zeros, zeros, cfg.margin);
                loss = tg.loss;
                active = tg.active;
                if (active && grad) {
                    g[0] = std::move(tg.head);
                    g[1] = std::move(tg.tail);
                    g[2] = std::move(tg.corrupted);
                }
                break;
            }
            case ModelKind::csn: {
                const auto wp = model.params.masks.row(t.relation.pair);
                const auto wn = model.params.masks.row(t.corrupted_relation.pair);
                const double d_pos = dist_csn(x, y, wp);
                const double d_neg = dist_csn(nh, nt, wn);
                loss = hinge_term(d_pos, d_neg, cfg.margin);
                active = hinge_active(d_pos, d_neg, cfg.margin);
                if (active && grad) {
                    auto gwp = grad->masks.row(t.relation.pair);
                    auto gwn = grad->masks.row(t.corrupted_relation.pair);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double dp = x[i] - y[i];
                        const double dn = nh[i] - nt[i];
                        g[0][i] += 2.0 * wp[i] * wp[i] * dp;
                        g[1][i] -= 2.0 * wp[i] * wp[i] * dp;
                        g_nh[i] -= 2.0 * wn[i] * wn[i] * dn;
                        g_nt[i] += 2.0 * wn[i] * wn[i] * dn;
                        gwp[i] += scale * 2.0 * wp[i] * dp * dp;
                        gwn[i] -= scale * 2.0 * wn[i] * dn * dn;
                    }
                }
                break;
            }
            case ModelKind::bpr: {
                const BprValue b = bpr_loss(score_inner(x, y), score_inner(nh, nt));
                loss = b.loss;
                active = score_inner(x, y) <= score_inner(nh, nt);
                if (grad) {
                    for (std::size_t i = 0; i < n; ++i) {
                        g[0][i] += b.grad_pos * y[i];
                        g[1][i] += b.grad_pos * x[i];
                        g_nh[i] += b.grad_neg * nt[i];
                        g_nt[i] += b.grad_neg * nh[i];
                    }
                }
                break;
            }
            case ModelKind::sianet: {
                const LossValue lp = contrastive_loss(dist_euclid(x, y), true, cfg.contrastive_margin);
                const LossValue ln = contrastive_loss(dist_euclid(nh, nt), false, cfg.contrastive_margin);
                loss = lp.loss + ln.loss;
                active = ln.loss > 0.0;
                if (grad) {
                    for (std::size_t i = 0; i < n; ++i) {
                        const double dp = 2.0 * (x[i] - y[i]) * lp.grad;
                        const double dn = 2.0 * (nh[i] - nt[i]) * ln.grad;
                        g[0][i] += dp;
                        g[1][i] -= dp;
                        g_nh[i] += dn;
                        g_nt[i] -= dn;
                    }
                }
                break;
            }
        }
        result.loss += loss;
        if (active) ++result.active;
        if (grad)
            for (std::size_t s = 0; s < 3; ++s) detail::backprop_slot(model, enc[s], g[s], scale, *grad);
    }
    result.loss *= scale;

    if (cfg.kind == ModelKind::csn && cfg.csn_l1 > 0.0) {
        double l1 = 0.0;
        for (double w : model.params.masks.flat()) l1 += std::abs(w);
        result.loss += cfg.csn_l1 * l1;
        if (grad) {
            auto gw = grad->masks.flat();
            auto w = model.params.masks.flat();
            for (std::size_t i = 0; i < w.size(); ++i) gw[i] += cfg.csn_l1 * (w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0));
        }
    }
    return result;
}

}  // namespace tnfcm
