#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "asterisk/parallel.hpp"
#include "asterisk/rng.hpp"
#include "asterisk/tensor.hpp"

namespace asterisk {

// ---------------------------------------------------------------------------
// matmul family. A, B, C row-major. The plain product plus the two transposed
// variants the backward passes need.
// ---------------------------------------------------------------------------

// C[m,n] = A[m,k] * B[k,n]
template <class T>
tensor<T> matmul(const tensor<T>& a, const tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw shape_error("matmul: incompatible shapes " + a.shape_string() + " * " +
                          b.shape_string());
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    tensor<T> c({m, n});
    parallel_for(m, 16, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            T* ci = c.row(i);
            const T* ai = a.row(i);
            for (std::size_t p = 0; p < k; ++p) {
                const T aip = ai[p];
                const T* bp = b.row(p);
                for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
            }
        }
    });
    return c;
}

// C[m,n] = A[m,k] * B[n,k]^T
template <class T>
tensor<T> matmul_nt(const tensor<T>& a, const tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
        throw shape_error("matmul_nt: incompatible shapes " + a.shape_string() + " * " +
                          b.shape_string() + "^T");
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    tensor<T> c({m, n});
    parallel_for(m, 16, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const T* ai = a.row(i);
            T* ci = c.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const T* bj = b.row(j);
                T acc{};
                for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
                ci[j] = acc;
            }
        }
    });
    return c;
}

// C[m,n] = A[k,m]^T * B[k,n]
template <class T>
tensor<T> matmul_tn(const tensor<T>& a, const tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
        throw shape_error("matmul_tn: incompatible shapes " + a.shape_string() + "^T * " +
                          b.shape_string());
    }
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    tensor<T> c({m, n});
    // Row block of C owned per task; each task scans all of A and B.
    parallel_for(m, 32, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = 0; p < k; ++p) {
            const T* ap = a.row(p);
            const T* bp = b.row(p);
            for (std::size_t i = lo; i < hi; ++i) {
                const T api = ap[i];
                T* ci = c.row(i);
                for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
            }
        }
    });
    return c;
}

// dC -> (dA, dB): dA = dC * B^T, dB = A^T * dC
template <class T>
std::pair<tensor<T>, tensor<T>> matmul_backward(const tensor<T>& a, const tensor<T>& b,
                                                const tensor<T>& d_out) {
    if (d_out.rank() != 2 || d_out.dim(0) != a.dim(0) || d_out.dim(1) != b.dim(1)) {
        throw shape_error("matmul_backward: upstream shape " + d_out.shape_string() +
                          " does not match product of " + a.shape_string() + " and " +
                          b.shape_string());
    }
    return {matmul_nt(d_out, b), matmul_tn(a, d_out)};
}

// ---------------------------------------------------------------------------
// GELU, tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))
// ---------------------------------------------------------------------------

namespace detail {
template <class T>
constexpr T gelu_c() {
    return static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
}
template <class T>
constexpr T gelu_a() {
    return static_cast<T>(0.044715);
}
}  // namespace detail

template <class T>
T gelu_scalar(T x) {
    const T u = detail::gelu_c<T>() * (x + detail::gelu_a<T>() * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
}

template <class T>
tensor<T> gelu(const tensor<T>& x) {
    tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = gelu_scalar(x[i]);
    return y;
}

template <class T>
tensor<T> gelu_backward(const tensor<T>& x, const tensor<T>& d_out) {
    if (!x.same_shape(d_out)) {
        throw shape_error("gelu_backward: shape mismatch");
    }
    tensor<T> dx(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T v = x[i];
        const T u = detail::gelu_c<T>() * (v + detail::gelu_a<T>() * v * v * v);
        const T t = std::tanh(u);
        const T du = detail::gelu_c<T>() * (T(1) + T(3) * detail::gelu_a<T>() * v * v);
        dx[i] = d_out[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Layer normalization over the last axis, population variance, then affine.
// ---------------------------------------------------------------------------

template <class T>
tensor<T> layer_norm(const tensor<T>& x, const tensor<T>& gain, const tensor<T>& bias,
                     T eps = T(1e-5)) {
    const std::size_t d = x.shape.back();
    if (gain.numel() != d || bias.numel() != d) {
        throw shape_error("layer_norm: gain/bias must have " + std::to_string(d) + " elements");
    }
    const std::size_t rows = x.numel() / d;
    tensor<T> y(x.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = x.data.data() + r * d;
        T* yr = y.data.data() + r * d;
        T mean{};
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<T>(d);
        T var{};
        for (std::size_t j = 0; j < d; ++j) {
            const T c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T inv_std = T(1) / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            yr[j] = (xr[j] - mean) * inv_std * gain[j] + bias[j];
        }
    }
    return y;
}

template <class T>
struct layer_norm_grads {
    tensor<T> dx;
    tensor<T> dgain;
    tensor<T> dbias;
};

template <class T>
layer_norm_grads<T> layer_norm_backward(const tensor<T>& x, const tensor<T>& gain,
                                        const tensor<T>& d_out, T eps = T(1e-5)) {
    if (!x.same_shape(d_out)) {
        throw shape_error("layer_norm_backward: shape mismatch");
    }
    const std::size_t d = x.shape.back();
    const std::size_t rows = x.numel() / d;
    layer_norm_grads<T> g{tensor<T>(x.shape), tensor<T>({d}), tensor<T>({d})};
    std::vector<T> xhat(d);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = x.data.data() + r * d;
        const T* dyr = d_out.data.data() + r * d;
        T* dxr = g.dx.data.data() + r * d;
        T mean{};
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<T>(d);
        T var{};
        for (std::size_t j = 0; j < d; ++j) {
            const T c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T inv_std = T(1) / std::sqrt(var + eps);
        // dL/dxhat = dy * gain; dx = inv_std * (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
        T sum_dxhat{}, sum_dxhat_xhat{};
        for (std::size_t j = 0; j < d; ++j) {
            xhat[j] = (xr[j] - mean) * inv_std;
            const T dxh = dyr[j] * gain[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat[j];
            g.dgain[j] += dyr[j] * xhat[j];
            g.dbias[j] += dyr[j];
        }
        const T mean_dxhat = sum_dxhat / static_cast<T>(d);
        const T mean_dxhat_xhat = sum_dxhat_xhat / static_cast<T>(d);
        for (std::size_t j = 0; j < d; ++j) {
            const T dxh = dyr[j] * gain[j];
            dxr[j] = inv_std * (dxh - mean_dxhat - xhat[j] * mean_dxhat_xhat);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Softmax over the last axis with a key mask: masked positions get exactly
// zero probability; live positions form a distribution.
// ---------------------------------------------------------------------------

template <class T>
tensor<T> masked_softmax(const tensor<T>& logits, const std::vector<uint8_t>& mask) {
    const std::size_t d = logits.shape.back();
    if (mask.size() != d) {
        throw shape_error("masked_softmax: mask length " + std::to_string(mask.size()) +
                          " vs last axis " + std::to_string(d));
    }
    bool any_live = false;
    for (uint8_t m : mask) any_live |= (m != 0);
    if (!any_live) {
        throw data_error("masked_softmax: all positions masked");
    }
    const std::size_t rows = logits.numel() / d;
    tensor<T> probs(logits.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* lr = logits.data.data() + r * d;
        T* pr = probs.data.data() + r * d;
        T max_live = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[j] && lr[j] > max_live) max_live = lr[j];
        }
        T denom{};
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[j]) {
                pr[j] = std::exp(lr[j] - max_live);
                denom += pr[j];
            } else {
                pr[j] = T(0);
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[j]) pr[j] /= denom;
        }
    }
    return probs;
}

// Needs only the forward probabilities: dL/dz_j = p_j * (dy_j - sum_k p_k dy_k).
template <class T>
tensor<T> masked_softmax_backward(const tensor<T>& probs, const tensor<T>& d_out) {
    if (!probs.same_shape(d_out)) {
        throw shape_error("masked_softmax_backward: shape mismatch");
    }
    const std::size_t d = probs.shape.back();
    const std::size_t rows = probs.numel() / d;
    tensor<T> dz(probs.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* pr = probs.data.data() + r * d;
        const T* dyr = d_out.data.data() + r * d;
        T* dzr = dz.data.data() + r * d;
        T dot{};
        for (std::size_t j = 0; j < d; ++j) dot += pr[j] * dyr[j];
        for (std::size_t j = 0; j < d; ++j) dzr[j] = pr[j] * (dyr[j] - dot);
    }
    return dz;
}

// ---------------------------------------------------------------------------
// Inverted dropout: survivors scaled by 1/(1-rate) at train time, identity at
// inference. The scale tensor doubles as the backward multiplier.
// ---------------------------------------------------------------------------

template <class T>
struct dropout_result {
    tensor<T> value;
    tensor<T> scale;  // elementwise multiplier applied; empty when identity
};

template <class T>
dropout_result<T> dropout(const tensor<T>& x, double rate, xoshiro256& gen, bool training) {
    if (rate < 0.0 || rate >= 1.0) {
        throw config_error("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return {x, tensor<T>{}};
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    dropout_result<T> out{tensor<T>(x.shape), tensor<T>(x.shape)};
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T s = gen.uniform() < rate ? T(0) : keep_scale;
        out.scale[i] = s;
        out.value[i] = x[i] * s;
    }
    return out;
}

template <class T>
dropout_result<T> dropout(const tensor<T>& x, double rate, rng_seed seed, bool training) {
    xoshiro256 gen(seed);
    return dropout(x, rate, gen, training);
}

template <class T>
tensor<T> dropout_backward(const tensor<T>& d_out, const tensor<T>& scale) {
    if (scale.numel() == 0) return d_out;  // identity forward
    if (!d_out.same_shape(scale)) {
        throw shape_error("dropout_backward: shape mismatch");
    }
    tensor<T> dx(d_out.shape);
    for (std::size_t i = 0; i < d_out.numel(); ++i) dx[i] = d_out[i] * scale[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Bias add over rows and its reduction backward.
// ---------------------------------------------------------------------------

template <class T>
void bias_add_inplace(tensor<T>& x, const tensor<T>& bias) {
    const std::size_t d = x.shape.back();
    if (bias.numel() != d) {
        throw shape_error("bias_add: bias length " + std::to_string(bias.numel()) +
                          " vs last axis " + std::to_string(d));
    }
    const std::size_t rows = x.numel() / d;
    for (std::size_t r = 0; r < rows; ++r) {
        T* xr = x.data.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) xr[j] += bias[j];
    }
}

template <class T>
tensor<T> bias_add(const tensor<T>& x, const tensor<T>& bias) {
    tensor<T> y = x;
    bias_add_inplace(y, bias);
    return y;
}

// dbias = column sums of upstream.
template <class T>
tensor<T> bias_backward(const tensor<T>& d_out) {
    const std::size_t d = d_out.shape.back();
    const std::size_t rows = d_out.numel() / d;
    tensor<T> db({d});
    for (std::size_t r = 0; r < rows; ++r) {
        const T* dr = d_out.data.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) db[j] += dr[j];
    }
    return db;
}

// ---------------------------------------------------------------------------
// Embedding lookup and its scatter-add backward.
// ---------------------------------------------------------------------------

template <class T>
tensor<T> embedding_lookup(const tensor<T>& table, const std::vector<int32_t>& ids) {
    if (table.rank() != 2) {
        throw shape_error("embedding_lookup: table must be 2-D");
    }
    const std::size_t d = table.dim(1);
    tensor<T> out({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int32_t id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= table.dim(0)) {
            throw data_error("embedding_lookup: id " + std::to_string(id) + " out of range");
        }
        const T* src = table.row(static_cast<std::size_t>(id));
        T* dst = out.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    return out;
}

// Accumulates into d_table (callers zero it or chain accumulation).
template <class T>
void embedding_backward(tensor<T>& d_table, const std::vector<int32_t>& ids,
                        const tensor<T>& d_out) {
    const std::size_t d = d_table.dim(1);
    if (d_out.rank() != 2 || d_out.dim(0) != ids.size() || d_out.dim(1) != d) {
        throw shape_error("embedding_backward: upstream shape mismatch");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        T* dst = d_table.row(static_cast<std::size_t>(ids[i]));
        const T* src = d_out.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
}

// ---------------------------------------------------------------------------
// Initializers.
// ---------------------------------------------------------------------------

// Uniform on [-b, b] with b = sqrt(6 / (fan_in + fan_out)); 2-D shapes only.
template <class T = float>
tensor<T> xavier_uniform(const std::vector<std::size_t>& shape, rng_seed seed) {
    if (shape.size() != 2) {
        throw shape_error("xavier_uniform: shape must be 2-D");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    xoshiro256 gen(seed);
    tensor<T> out(shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<T>(gen.uniform(-bound, bound));
    }
    return out;
}

inline double xavier_bound(std::size_t fan_a, std::size_t fan_b) {
    return std::sqrt(6.0 / static_cast<double>(fan_a + fan_b));
}

template <class T = float>
tensor<T> normal_init(const std::vector<std::size_t>& shape, double mean, double stddev,
                      rng_seed seed) {
    if (!(stddev > 0.0)) {
        throw config_error("normal_init: std must be positive, got " + std::to_string(stddev));
    }
    xoshiro256 gen(seed);
    tensor<T> out(shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = static_cast<T>(gen.normal(mean, stddev));
    }
    return out;
}

}  // namespace asterisk
