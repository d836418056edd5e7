#pragma once

#include <cmath>
#include <cstdint>

#include "asterisk/tensor.hpp"

namespace asterisk {

struct adam_hyperparams {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moments for a single parameter tensor. m/v are lazily sized on first use.
template <class T>
struct adam_state {
    tensor<T> m;
    tensor<T> v;
    uint64_t t = 0;
};

// One Adam update with bias correction on the exact step count `t_after`.
// Shared kernel so a model-sized optimizer can keep one global step counter.
template <class T>
void adam_update(tensor<T>& param, const tensor<T>& grad, tensor<T>& m, tensor<T>& v,
                 uint64_t t_after, const adam_hyperparams& hp) {
    if (!param.same_shape(grad)) {
        throw shape_error("adam_update: grad shape " + grad.shape_string() +
                          " vs param " + param.shape_string());
    }
    if (m.numel() == 0) m = zeros_like(param);
    if (v.numel() == 0) v = zeros_like(param);
    if (!m.same_shape(param) || !v.same_shape(param)) {
        throw shape_error("adam_update: moment shape mismatch");
    }
    const T b1 = static_cast<T>(hp.beta1);
    const T b2 = static_cast<T>(hp.beta2);
    const T one_minus_b1 = static_cast<T>(1.0 - hp.beta1);
    const T one_minus_b2 = static_cast<T>(1.0 - hp.beta2);
    const T corr1 = static_cast<T>(1.0 - std::pow(hp.beta1, static_cast<double>(t_after)));
    const T corr2 = static_cast<T>(1.0 - std::pow(hp.beta2, static_cast<double>(t_after)));
    const T lr = static_cast<T>(hp.learning_rate);
    const T eps = static_cast<T>(hp.eps);
    for (std::size_t i = 0; i < param.numel(); ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + one_minus_b1 * g;
        v[i] = b2 * v[i] + one_minus_b2 * g * g;
        const T m_hat = m[i] / corr1;
        const T v_hat = v[i] / corr2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

template <class T>
void adam_step(tensor<T>& param, const tensor<T>& grad, adam_state<T>& state,
               const adam_hyperparams& hp) {
    state.t += 1;
    adam_update(param, grad, state.m, state.v, state.t, hp);
}

}  // namespace asterisk
