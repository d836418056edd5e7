#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asterisk/adam.hpp"
#include "asterisk/checkpoint.hpp"
#include "asterisk/ops.hpp"
#include "asterisk/rng.hpp"
#include "asterisk/tensor.hpp"

namespace asterisk {

// Classification head: 256 -> 128 -> 64 -> C, ReLU hidden activations,
// trained with cross entropy over a frozen encoder's embeddings.

struct classifier_config {
    std::size_t input_dim = 256;
    std::vector<std::size_t> hidden = {128, 64};
    std::size_t num_classes = 2;
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    std::size_t early_stop_patience = 3;  // non-improving validation epochs
    rng_seed seed;

    void validate() const {
        if (num_classes < 2) {
            throw config_error("classifier config: need at least 2 classes, got " +
                               std::to_string(num_classes));
        }
        if (hidden.size() != 2 || hidden[0] == 0 || hidden[1] == 0 || input_dim == 0) {
            throw config_error("classifier config: expected two positive hidden widths");
        }
        if (learning_rate <= 0.0 || batch_size < 1 || epochs < 1) {
            throw config_error("classifier config: bad optimizer settings");
        }
    }
};

template <class T>
struct classifier_params {
    tensor<T> w1, b1;  // [input, h1]
    tensor<T> w2, b2;  // [h1, h2]
    tensor<T> w3, b3;  // [h2, C]
};

template <class T, class Fn>
void for_each_tensor(classifier_params<T>& p, Fn&& fn) {
    fn("fc.w1", p.w1);
    fn("fc.b1", p.b1);
    fn("fc.w2", p.w2);
    fn("fc.b2", p.b2);
    fn("fc.w3", p.w3);
    fn("fc.b3", p.b3);
}

template <class T>
std::size_t count_parameters(const classifier_params<T>& p) {
    return p.w1.numel() + p.b1.numel() + p.w2.numel() + p.b2.numel() + p.w3.numel() +
           p.b3.numel();
}

template <class T = float>
classifier_params<T> init_classifier(const classifier_config& cfg, rng_seed seed) {
    cfg.validate();
    classifier_params<T> p;
    p.w1 = xavier_uniform<T>({cfg.input_dim, cfg.hidden[0]}, derive_seed(seed, "fc.w1"));
    p.b1 = tensor<T>({cfg.hidden[0]});
    p.w2 = xavier_uniform<T>({cfg.hidden[0], cfg.hidden[1]}, derive_seed(seed, "fc.w2"));
    p.b2 = tensor<T>({cfg.hidden[1]});
    p.w3 = xavier_uniform<T>({cfg.hidden[1], cfg.num_classes}, derive_seed(seed, "fc.w3"));
    p.b3 = tensor<T>({cfg.num_classes});
    return p;
}

// ---------------------------------------------------------------------------
// Forward / backward. Inputs are [batch, input_dim]; logits [batch, C].
// ---------------------------------------------------------------------------

template <class T>
struct classifier_cache {
    tensor<T> x;       // input
    tensor<T> a1, r1;  // first affine, relu
    tensor<T> a2, r2;  // second affine, relu
};

template <class T>
tensor<T> classifier_forward_cached(const classifier_params<T>& p, const tensor<T>& x,
                                    classifier_cache<T>& cache) {
    if (x.rank() != 2 || x.dim(1) != p.w1.dim(0)) {
        throw shape_error("classifier_forward: input " + x.shape_string() + " vs weights [" +
                          std::to_string(p.w1.dim(0)) + ", ...]");
    }
    cache.x = x;
    cache.a1 = bias_add(matmul(x, p.w1), p.b1);
    cache.r1 = cache.a1;
    for (T& v : cache.r1.data) v = std::max(v, T(0));
    cache.a2 = bias_add(matmul(cache.r1, p.w2), p.b2);
    cache.r2 = cache.a2;
    for (T& v : cache.r2.data) v = std::max(v, T(0));
    return bias_add(matmul(cache.r2, p.w3), p.b3);
}

template <class T>
tensor<T> classifier_forward(const classifier_params<T>& p, const tensor<T>& x) {
    classifier_cache<T> cache;
    return classifier_forward_cached(p, x, cache);
}

template <class T>
classifier_params<T> classifier_backward(const classifier_params<T>& p,
                                         const classifier_cache<T>& cache,
                                         const tensor<T>& d_logits) {
    classifier_params<T> g;
    g.b3 = bias_backward(d_logits);
    auto [d_r2, d_w3] = matmul_backward(cache.r2, p.w3, d_logits);
    g.w3 = std::move(d_w3);
    tensor<T> d_a2 = std::move(d_r2);
    for (std::size_t i = 0; i < d_a2.numel(); ++i) {
        if (cache.a2[i] <= T(0)) d_a2[i] = T(0);
    }
    g.b2 = bias_backward(d_a2);
    auto [d_r1, d_w2] = matmul_backward(cache.r1, p.w2, d_a2);
    g.w2 = std::move(d_w2);
    tensor<T> d_a1 = std::move(d_r1);
    for (std::size_t i = 0; i < d_a1.numel(); ++i) {
        if (cache.a1[i] <= T(0)) d_a1[i] = T(0);
    }
    g.b1 = bias_backward(d_a1);
    auto [d_x, d_w1] = matmul_backward(cache.x, p.w1, d_a1);
    g.w1 = std::move(d_w1);
    (void)d_x;  // encoder is frozen; input gradient is discarded
    return g;
}

// ---------------------------------------------------------------------------
// Cross entropy with max-subtraction stabilization.
// Gradient w.r.t. logits is softmax - one_hot(label).
// ---------------------------------------------------------------------------

template <class T>
std::vector<T> softmax_row(const T* logits, std::size_t n) {
    T max_v = logits[0];
    for (std::size_t j = 1; j < n; ++j) max_v = std::max(max_v, logits[j]);
    std::vector<T> probs(n);
    T denom{};
    for (std::size_t j = 0; j < n; ++j) {
        probs[j] = std::exp(logits[j] - max_v);
        denom += probs[j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[j] /= denom;
    return probs;
}

template <class T>
struct cross_entropy_result {
    double loss = 0.0;
    tensor<T> d_logits;
};

template <class T>
cross_entropy_result<T> cross_entropy(const tensor<T>& logits, const std::vector<int32_t>& labels) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw shape_error("cross_entropy: logits " + logits.shape_string() + " vs " +
                          std::to_string(labels.size()) + " labels");
    }
    const std::size_t B = logits.dim(0);
    const std::size_t C = logits.dim(1);
    cross_entropy_result<T> res;
    res.d_logits = tensor<T>({B, C});
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t b = 0; b < B; ++b) {
        const int32_t label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= C) {
            throw data_error("cross_entropy: label " + std::to_string(label) +
                             " outside [0, " + std::to_string(C) + ")");
        }
        const std::vector<T> probs = softmax_row(logits.row(b), C);
        const double p_true = static_cast<double>(probs[static_cast<std::size_t>(label)]);
        res.loss += -std::log(std::max(p_true, 1e-300)) * inv_b;
        T* g = res.d_logits.row(b);
        for (std::size_t j = 0; j < C; ++j) {
            const double one_hot = (j == static_cast<std::size_t>(label)) ? 1.0 : 0.0;
            g[j] = static_cast<T>((static_cast<double>(probs[j]) - one_hot) * inv_b);
        }
    }
    return res;
}

template <class T>
std::pair<double, std::vector<T>> cross_entropy_single(const std::vector<T>& logits,
                                                       int32_t label) {
    tensor<T> row({1, logits.size()});
    std::copy(logits.begin(), logits.end(), row.data.begin());
    auto res = cross_entropy(row, {label});
    std::vector<T> grad(res.d_logits.data.begin(), res.d_logits.data.end());
    return {res.loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Prediction: argmax of softmax, ties broken toward the lowest class id.
// ---------------------------------------------------------------------------

struct prediction {
    int32_t label = 0;
    std::vector<float> probabilities;
};

template <class T>
prediction predict(const classifier_params<T>& p, const std::vector<T>& embedding) {
    tensor<T> x({1, embedding.size()});
    std::copy(embedding.begin(), embedding.end(), x.data.begin());
    const tensor<T> logits = classifier_forward(p, x);
    const std::vector<T> probs = softmax_row(logits.row(0), logits.dim(1));
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[best]) best = j;  // strict: ties keep the lowest id
    }
    prediction out;
    out.label = static_cast<int32_t>(best);
    out.probabilities.assign(probs.begin(), probs.end());
    return out;
}

// ---------------------------------------------------------------------------
// Training over labeled embeddings. Mini-batch Adam, per-epoch shuffle; when
// a validation split is supplied, accuracy is recorded per epoch and training
// stops early after `early_stop_patience` non-improving epochs.
// ---------------------------------------------------------------------------

struct labeled_embedding {
    std::vector<float> embedding;
    int32_t label = 0;
};

struct classifier_train_result {
    classifier_params<float> params;
    std::vector<double> train_loss_per_epoch;
    std::vector<double> validation_accuracy;  // empty without a validation set
};

inline double classifier_accuracy(const classifier_params<float>& p,
                                  const std::vector<labeled_embedding>& data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& ex : data) {
        if (predict(p, ex.embedding).label == ex.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

inline classifier_train_result train_classifier(
    const std::vector<labeled_embedding>& data, const classifier_config& cfg,
    const std::vector<labeled_embedding>& validation = {}) {
    cfg.validate();
    if (data.empty()) {
        throw data_error("train_classifier: empty dataset");
    }
    for (const auto& ex : data) {
        if (ex.embedding.size() != cfg.input_dim) {
            throw shape_error("train_classifier: embedding size " +
                              std::to_string(ex.embedding.size()) + " vs input_dim " +
                              std::to_string(cfg.input_dim));
        }
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= cfg.num_classes) {
            throw data_error("train_classifier: label " + std::to_string(ex.label) +
                             " outside [0, " + std::to_string(cfg.num_classes) + ")");
        }
    }

    classifier_train_result result;
    result.params = init_classifier<float>(cfg, cfg.seed);
    adam_state<float> st_w1, st_b1, st_w2, st_b2, st_w3, st_b3;
    const adam_hyperparams hp{cfg.learning_rate, 0.9, 0.999, 1e-8};

    std::vector<std::size_t> order(data.size());
    double best_val = -1.0;
    std::size_t stale_epochs = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        xoshiro256 shuffle_rng(derive_seed(cfg.seed, "fc-shuffle", epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t lo = 0; lo < data.size(); lo += cfg.batch_size) {
            const std::size_t hi = std::min(lo + cfg.batch_size, data.size());
            tensor<float> x({hi - lo, cfg.input_dim});
            std::vector<int32_t> labels(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto& ex = data[order[i]];
                std::copy(ex.embedding.begin(), ex.embedding.end(), x.row(i - lo));
                labels[i - lo] = ex.label;
            }
            classifier_cache<float> cache;
            const tensor<float> logits = classifier_forward_cached(result.params, x, cache);
            auto ce = cross_entropy(logits, labels);
            epoch_loss += ce.loss;
            ++batches;
            classifier_params<float> grads =
                classifier_backward(result.params, cache, ce.d_logits);
            adam_step(result.params.w1, grads.w1, st_w1, hp);
            adam_step(result.params.b1, grads.b1, st_b1, hp);
            adam_step(result.params.w2, grads.w2, st_w2, hp);
            adam_step(result.params.b2, grads.b2, st_b2, hp);
            adam_step(result.params.w3, grads.w3, st_w3, hp);
            adam_step(result.params.b3, grads.b3, st_b3, hp);
        }
        result.train_loss_per_epoch.push_back(epoch_loss / static_cast<double>(batches));

        if (!validation.empty()) {
            const double acc = classifier_accuracy(result.params, validation);
            result.validation_accuracy.push_back(acc);
            if (acc > best_val) {
                best_val = acc;
                stale_epochs = 0;
            } else if (++stale_epochs >= cfg.early_stop_patience) {
                break;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Head checkpoints share the container format, tensors prefixed "fc.".
// ---------------------------------------------------------------------------

inline void save_classifier_checkpoint(const std::string& path,
                                       const classifier_params<float>& params) {
    std::vector<named_tensor> tensors;
    for_each_tensor(const_cast<classifier_params<float>&>(params),
                    [&](const std::string& name, tensor<float>& t) {
                        tensors.push_back({name, t});
                    });
    save_container(path, tensors, 0);
}

inline classifier_params<float> load_classifier_checkpoint(const std::string& path) {
    container_contents raw = load_container(path);
    classifier_params<float> p;
    const auto take = [&](const char* name, tensor<float>& dst) {
        const tensor<float>* t = raw.find(name);
        if (t == nullptr) {
            throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                   std::string("head checkpoint missing tensor ") + name);
        }
        dst = *t;
    };
    take("fc.w1", p.w1);
    take("fc.b1", p.b1);
    take("fc.w2", p.w2);
    take("fc.b2", p.b2);
    take("fc.w3", p.w3);
    take("fc.b3", p.b3);
    return p;
}

}  // namespace asterisk
