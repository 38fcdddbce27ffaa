#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tnfcm/common.hpp"
#include "tnfcm/linalg.hpp"
#include "tnfcm/random.hpp"

namespace tnfcm {

/// Guard below which a pre-normalization vector is treated as degenerate.
inline constexpr double kMinEmbeddingNorm = 1e-12;

/// Trainable projection for one modality:
///   z = W * a + b,  a = dropout(f)          (no hidden layer)
///   z = W * relu(H * a + c) + b             (hidden_dim > 0)
/// followed by u = z / |z|.
struct ModalityEncoder {
    std::string modality;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;  // 0 disables the hidden layer
    std::size_t embed_dim = 0;
    Matrix hidden_weight;  // hidden_dim x input_dim
    std::vector<double> hidden_bias;
    Matrix weight;  // embed_dim x (hidden_dim ? hidden_dim : input_dim)
    std::vector<double> bias;

    bool has_hidden() const noexcept { return hidden_dim > 0; }

    ModalityEncoder zeros_like() const {
        ModalityEncoder g = *this;
        g.hidden_weight.fill(0.0);
        std::fill(g.hidden_bias.begin(), g.hidden_bias.end(), 0.0);
        g.weight.fill(0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
        return g;
    }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline ModalityEncoder init_encoder(std::string modality, std::size_t input_dim, std::size_t embed_dim,
                                    std::size_t hidden_dim, std::uint64_t seed) {
    if (input_dim == 0 || embed_dim == 0) throw ConfigError("encoder dimensions must be positive");
    ModalityEncoder e;
    e.modality = std::move(modality);
    e.input_dim = input_dim;
    e.hidden_dim = hidden_dim;
    e.embed_dim = embed_dim;
    Rng rng = make_rng(seed, "encoder_init");
    auto fill_uniform = [&rng](Matrix& m, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : m.flat()) v = uniform_real(rng, -bound, bound);
    };
    std::size_t proj_in = input_dim;
    if (hidden_dim > 0) {
        e.hidden_weight = Matrix(hidden_dim, input_dim);
        fill_uniform(e.hidden_weight, input_dim);
        e.hidden_bias.assign(hidden_dim, 0.0);
        proj_in = hidden_dim;
    }
    e.weight = Matrix(embed_dim, proj_in);
    fill_uniform(e.weight, proj_in);
    e.bias.assign(embed_dim, 0.0);
    return e;
}

/// Inverted-dropout mask on raw inputs: each entry is 0 or 1/(1-rate).
/// A mask that would drop every entry is redrawn from the same stream, so
/// a training item never collapses to the bias alone.
inline std::vector<double> dropout_mask(std::size_t dim, double rate, Rng& rng) {
    std::vector<double> mask(dim, 1.0);
    if (rate <= 0.0 || dim == 0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::bernoulli_distribution drop(rate);
    bool any_kept = false;
    while (!any_kept) {
        for (double& m : mask) {
            m = drop(rng) ? 0.0 : keep_scale;
            any_kept = any_kept || m != 0.0;
        }
    }
    return mask;
}

/// Forward intermediates needed by encode_backward.
struct EncodeTrace {
    std::vector<double> input;       // masked raw features
    std::vector<double> hidden_pre;  // empty without hidden layer
    std::vector<double> hidden;
    std::vector<double> z;           // pre-normalization
    double z_norm = 0.0;
    std::vector<double> output;      // unit-norm embedding
};

/// Runs the encoder. An empty `mask` means keep everything (inference).
inline EncodeTrace encode_traced(const ModalityEncoder& enc, std::span<const float> raw,
                                 std::span<const double> mask = {}) {
    require_same_size(raw.size(), enc.input_dim, "encode: raw features");
    if (!mask.empty()) require_same_size(mask.size(), enc.input_dim, "encode: dropout mask");
    EncodeTrace t;
    t.input.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) t.input[i] = mask.empty() ? raw[i] : mask[i] * raw[i];

    std::span<const double> proj_in = t.input;
    if (enc.has_hidden()) {
        t.hidden_pre.resize(enc.hidden_dim);
        matvec(enc.hidden_weight, t.input, t.hidden_pre);
        t.hidden.resize(enc.hidden_dim);
        for (std::size_t i = 0; i < enc.hidden_dim; ++i) {
            t.hidden_pre[i] += enc.hidden_bias[i];
            t.hidden[i] = t.hidden_pre[i] > 0.0 ? t.hidden_pre[i] : 0.0;
        }
        proj_in = t.hidden;
    }
    t.z.resize(enc.embed_dim);
    matvec(enc.weight, proj_in, t.z);
    for (std::size_t i = 0; i < enc.embed_dim; ++i) t.z[i] += enc.bias[i];
    t.z_norm = norm(t.z);
    if (!(t.z_norm >= kMinEmbeddingNorm))
        throw DegenerateEmbeddingError("degenerate " + enc.modality +
                                       " embedding: pre-normalization norm below 1e-12 "
                                       "(dead encoder or all-zero features)");
    t.output.resize(enc.embed_dim);
    for (std::size_t i = 0; i < enc.embed_dim; ++i) t.output[i] = t.z[i] / t.z_norm;
    return t;
}

inline std::vector<double> encode(const ModalityEncoder& enc, std::span<const float> raw,
                                  std::span<const double> mask = {}) {
    return encode_traced(enc, raw, mask).output;
}

/// Pulls an upstream gradient on the unit-norm output back through the
/// normalization Jacobian (I - u u^T) / |z|. The result is tangent to u.
inline std::vector<double> normalization_backward(std::span<const double> output, double z_norm,
                                                  std::span<const double> upstream) {
    require_same_size(output.size(), upstream.size(), "normalization_backward");
    if (!(z_norm >= kMinEmbeddingNorm))
        throw DegenerateEmbeddingError("degenerate embedding in backward pass: norm below 1e-12");
    const double radial = dot(output, upstream);
    std::vector<double> gz(output.size());
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] = (upstream[i] - radial * output[i]) / z_norm;
    return gz;
}

/// Accumulates parameter gradients for one forward pass into `grad`
/// (single writer per buffer).
inline void encode_backward(const ModalityEncoder& enc, const EncodeTrace& trace, std::span<const double> upstream,
                            ModalityEncoder& grad) {
    require_same_size(upstream.size(), enc.embed_dim, "encode_backward: upstream gradient");
    const std::vector<double> gz = normalization_backward(trace.output, trace.z_norm, upstream);
    const std::span<const double> proj_in = enc.has_hidden() ? std::span<const double>(trace.hidden)
                                                              : std::span<const double>(trace.input);
    add_outer(grad.weight, gz, proj_in);
    axpy(1.0, gz, grad.bias);
    if (!enc.has_hidden()) return;
    std::vector<double> gh(enc.hidden_dim);
    matvec_transposed(enc.weight, gz, gh);
    for (std::size_t i = 0; i < gh.size(); ++i)
        if (trace.hidden_pre[i] <= 0.0) gh[i] = 0.0;
    add_outer(grad.hidden_weight, gh, trace.input);
    axpy(1.0, gh, grad.hidden_bias);
}

/// Embedding with a modality tag ("visual", "textual", or "visual+textual").
struct ItemEmbedding {
    std::string modality;
    std::vector<double> values;
};

/// Concatenates per-modality unit vectors in the given order; a single
/// part passes through unchanged.
inline ItemEmbedding fuse(std::span<const ItemEmbedding> parts) {
    if (parts.empty()) throw DimensionError("fuse: no embeddings given");
    if (parts.size() == 1) return parts.front();
    ItemEmbedding out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].values.size() != parts[0].values.size())
            throw DimensionError("fuse: modality embeddings have different dimensions");
        for (std::size_t j = 0; j < i; ++j)
            if (parts[j].modality == parts[i].modality)
                throw DimensionError("fuse: modality '" + parts[i].modality + "' given twice");
        out.modality += (i ? "+" : "") + parts[i].modality;
        out.values.insert(out.values.end(), parts[i].values.begin(), parts[i].values.end());
    }
    return out;
}

inline ItemEmbedding fuse(const ItemEmbedding& visual, const ItemEmbedding& textual) {
    const ItemEmbedding parts[] = {visual, textual};
    return fuse(parts);
}

}  // namespace tnfcm
