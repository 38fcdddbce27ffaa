#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "tnfcm/common.hpp"
#include "tnfcm/linalg.hpp"

namespace tnfcm {

/// Step-decay schedule: base / factor^floor(epoch / every).
inline double step_decay_lr(std::size_t epoch, double base_lr, std::size_t drop_every, double drop_factor) {
    if (drop_every == 0) return base_lr;
    return base_lr / std::pow(drop_factor, static_cast<double>(epoch / drop_every));
}

/// Classical momentum: v <- mu * v - lr * g; theta <- theta + v.
inline void sgd_momentum_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
                              double lr, double momentum, const std::string& tensor_name = "tensor") {
    require_same_size(params.size(), grads.size(), "sgd_momentum_step grads");
    require_same_size(params.size(), velocity.size(), "sgd_momentum_step velocity");
    if (!all_finite(grads)) throw NonFiniteError("non-finite gradient in " + tensor_name);
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grads[i];
        params[i] += velocity[i];
    }
}

}  // namespace tnfcm
