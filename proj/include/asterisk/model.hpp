#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "asterisk/adam.hpp"
#include "asterisk/ops.hpp"
#include "asterisk/rng.hpp"
#include "asterisk/tensor.hpp"
#include "asterisk/tokenizer.hpp"

namespace asterisk {

// ---------------------------------------------------------------------------
// Configuration. Defaults are the shipped architecture; tiny overrides keep
// the gradient checks fast.
// ---------------------------------------------------------------------------

struct model_config {
    std::size_t vocab_size = 50259;
    std::size_t d_model = 256;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t d_ff = 512;
    std::size_t max_seq = 128;
    double dropout_rate = 0.1;

    std::size_t d_head() const { return d_model / n_heads; }

    void validate() const {
        if (vocab_size == 0 || d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 ||
            max_seq == 0) {
            throw config_error("model config: all dimensions must be positive");
        }
        if (d_model % n_heads != 0) {
            throw config_error("model config: d_model " + std::to_string(d_model) +
                               " not divisible by n_heads " + std::to_string(n_heads));
        }
        if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
            throw config_error("model config: dropout must be in [0, 1)");
        }
    }
};

// ---------------------------------------------------------------------------
// Parameters. Linear layers compute y = x * W + b with W laid out
// [d_in, d_out]. The visit order below is the canonical tensor order used by
// checkpoints and the optimizer.
// ---------------------------------------------------------------------------

template <class T>
struct layer_params {
    tensor<T> ln1_gain, ln1_bias;
    tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
    tensor<T> ln2_gain, ln2_bias;
    tensor<T> w1, b1, w2, b2;
};

template <class T>
struct model_params {
    tensor<T> token_embedding;     // [vocab, d_model]
    tensor<T> position_embedding;  // [max_seq, d_model]
    std::vector<layer_params<T>> layers;
    tensor<T> final_ln_gain, final_ln_bias;
    tensor<T> out_proj;  // [d_model, d_model]
    tensor<T> out_bias;  // [d_model]
};

template <class T, class Fn>
void for_each_tensor(model_params<T>& p, Fn&& fn) {
    fn("token_embedding", p.token_embedding);
    fn("position_embedding", p.position_embedding);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const std::string pre = "layers." + std::to_string(l) + ".";
        auto& lp = p.layers[l];
        fn(pre + "ln1.gain", lp.ln1_gain);
        fn(pre + "ln1.bias", lp.ln1_bias);
        fn(pre + "attn.wq", lp.wq);
        fn(pre + "attn.bq", lp.bq);
        fn(pre + "attn.wk", lp.wk);
        fn(pre + "attn.bk", lp.bk);
        fn(pre + "attn.wv", lp.wv);
        fn(pre + "attn.bv", lp.bv);
        fn(pre + "attn.wo", lp.wo);
        fn(pre + "attn.bo", lp.bo);
        fn(pre + "ln2.gain", lp.ln2_gain);
        fn(pre + "ln2.bias", lp.ln2_bias);
        fn(pre + "ff.w1", lp.w1);
        fn(pre + "ff.b1", lp.b1);
        fn(pre + "ff.w2", lp.w2);
        fn(pre + "ff.b2", lp.b2);
    }
    fn("final_ln.gain", p.final_ln_gain);
    fn("final_ln.bias", p.final_ln_bias);
    fn("out_proj.weight", p.out_proj);
    fn("out_proj.bias", p.out_bias);
}

template <class T, class Fn>
void for_each_tensor(const model_params<T>& p, Fn&& fn) {
    for_each_tensor(const_cast<model_params<T>&>(p),
                    [&](const std::string& name, tensor<T>& t) {
                        fn(name, static_cast<const tensor<T>&>(t));
                    });
}

template <class T>
std::size_t count_parameters(const model_params<T>& p) {
    std::size_t total = 0;
    for_each_tensor(p, [&](const std::string&, const tensor<T>& t) { total += t.numel(); });
    return total;
}

// Allocates the tensor structure with zeros; used for gradients and moments.
template <class T>
model_params<T> make_param_structure(const model_config& cfg) {
    model_params<T> p;
    p.token_embedding = tensor<T>({cfg.vocab_size, cfg.d_model});
    p.position_embedding = tensor<T>({cfg.max_seq, cfg.d_model});
    p.layers.resize(cfg.n_layers);
    for (auto& lp : p.layers) {
        lp.ln1_gain = tensor<T>({cfg.d_model});
        lp.ln1_bias = tensor<T>({cfg.d_model});
        lp.wq = tensor<T>({cfg.d_model, cfg.d_model});
        lp.bq = tensor<T>({cfg.d_model});
        lp.wk = tensor<T>({cfg.d_model, cfg.d_model});
        lp.bk = tensor<T>({cfg.d_model});
        lp.wv = tensor<T>({cfg.d_model, cfg.d_model});
        lp.bv = tensor<T>({cfg.d_model});
        lp.wo = tensor<T>({cfg.d_model, cfg.d_model});
        lp.bo = tensor<T>({cfg.d_model});
        lp.ln2_gain = tensor<T>({cfg.d_model});
        lp.ln2_bias = tensor<T>({cfg.d_model});
        lp.w1 = tensor<T>({cfg.d_model, cfg.d_ff});
        lp.b1 = tensor<T>({cfg.d_ff});
        lp.w2 = tensor<T>({cfg.d_ff, cfg.d_model});
        lp.b2 = tensor<T>({cfg.d_model});
    }
    p.final_ln_gain = tensor<T>({cfg.d_model});
    p.final_ln_bias = tensor<T>({cfg.d_model});
    p.out_proj = tensor<T>({cfg.d_model, cfg.d_model});
    p.out_bias = tensor<T>({cfg.d_model});
    return p;
}

// Embeddings draw from Normal(0, 0.02); attention, feed-forward and the
// output projection are Xavier-uniform; biases zero; layer-norm gains one.
template <class T = float>
model_params<T> init_model(const model_config& cfg, rng_seed seed) {
    cfg.validate();
    model_params<T> p = make_param_structure<T>(cfg);
    constexpr double kEmbeddingStd = 0.02;
    p.token_embedding =
        normal_init<T>({cfg.vocab_size, cfg.d_model}, 0.0, kEmbeddingStd, derive_seed(seed, "tok"));
    p.position_embedding =
        normal_init<T>({cfg.max_seq, cfg.d_model}, 0.0, kEmbeddingStd, derive_seed(seed, "pos"));
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        auto& lp = p.layers[l];
        lp.ln1_gain.fill(T(1));
        lp.ln2_gain.fill(T(1));
        lp.wq = xavier_uniform<T>({cfg.d_model, cfg.d_model}, derive_seed(seed, "wq", l));
        lp.wk = xavier_uniform<T>({cfg.d_model, cfg.d_model}, derive_seed(seed, "wk", l));
        lp.wv = xavier_uniform<T>({cfg.d_model, cfg.d_model}, derive_seed(seed, "wv", l));
        lp.wo = xavier_uniform<T>({cfg.d_model, cfg.d_model}, derive_seed(seed, "wo", l));
        lp.w1 = xavier_uniform<T>({cfg.d_model, cfg.d_ff}, derive_seed(seed, "w1", l));
        lp.w2 = xavier_uniform<T>({cfg.d_ff, cfg.d_model}, derive_seed(seed, "w2", l));
    }
    p.final_ln_gain.fill(T(1));
    p.out_proj = xavier_uniform<T>({cfg.d_model, cfg.d_model}, derive_seed(seed, "out"));
    return p;
}

// ---------------------------------------------------------------------------
// Forward pass with cache. Activations are [batch*seq, d_model] row-major;
// sequence b occupies rows [b*seq, (b+1)*seq).
// ---------------------------------------------------------------------------

template <class T>
struct layer_cache {
    tensor<T> x_in;             // residual input
    tensor<T> h1;               // ln1 output
    tensor<T> q, k, v;          // projections, heads still packed
    tensor<T> probs;            // [batch, heads, seq, seq] post-softmax
    tensor<T> attn_drop_scale;  // dropout multiplier on probs (may be empty)
    tensor<T> probs_dropped;
    tensor<T> ctx;              // attention output, heads re-packed, pre-Wo
    tensor<T> attn_res_scale;   // dropout multiplier on the attention branch
    tensor<T> x_mid;            // after attention residual
    tensor<T> h2;               // ln2 output
    tensor<T> a1;               // ff pre-activation
    tensor<T> g1;               // gelu(a1)
    tensor<T> ff_res_scale;     // dropout multiplier on the ff branch
};

template <class T>
struct forward_cache {
    std::size_t batch = 0;
    std::size_t seq = 0;
    tensor<T> x0;  // embedding sum
    std::vector<layer_cache<T>> layers;
    tensor<T> x_final;
    tensor<T> normed;      // final layer norm output
    tensor<T> pooled_pre;  // [batch, d_model] masked mean of normed
};

namespace detail {

// Copies head `h` of sequence `b` out of a packed [batch*seq, d_model] tensor.
template <class T>
tensor<T> slice_head(const tensor<T>& packed, std::size_t b, std::size_t h, std::size_t seq,
                     std::size_t d_head) {
    tensor<T> out({seq, d_head});
    const std::size_t d_model = packed.dim(1);
    for (std::size_t t = 0; t < seq; ++t) {
        const T* src = packed.row(b * seq + t) + h * d_head;
        T* dst = out.row(t);
        for (std::size_t j = 0; j < d_head; ++j) dst[j] = src[j];
        (void)d_model;
    }
    return out;
}

template <class T>
void add_head_slice(tensor<T>& packed, const tensor<T>& block, std::size_t b, std::size_t h,
                    std::size_t seq, std::size_t d_head) {
    for (std::size_t t = 0; t < seq; ++t) {
        T* dst = packed.row(b * seq + t) + h * d_head;
        const T* src = block.row(t);
        for (std::size_t j = 0; j < d_head; ++j) dst[j] += src[j];
    }
}

}  // namespace detail

template <class T>
void check_batch(const model_config& cfg, const std::vector<encoded_sequence>& batch) {
    if (batch.empty()) {
        throw data_error("encode_batch: empty batch");
    }
    for (const auto& seq : batch) {
        if (seq.length() != cfg.max_seq) {
            throw shape_error("encode_batch: sequence length " + std::to_string(seq.length()) +
                              " vs configured " + std::to_string(cfg.max_seq));
        }
        if (seq.real_length == 0) {
            throw data_error("encode_batch: sequence with no real tokens");
        }
    }
    (void)sizeof(T);
}

// Returns pooled embeddings [batch, d_model]; fills `cache` when training or
// when a backward pass will follow.
template <class T>
tensor<T> encode_batch_cached(const model_config& cfg, const model_params<T>& params,
                              const std::vector<encoded_sequence>& batch, bool training,
                              rng_seed seed, forward_cache<T>& cache) {
    check_batch<T>(cfg, batch);
    const std::size_t B = batch.size();
    const std::size_t L = cfg.max_seq;
    const std::size_t D = cfg.d_model;
    const std::size_t H = cfg.n_heads;
    const std::size_t DH = cfg.d_head();
    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(DH)));
    xoshiro256 drop_rng(derive_seed(seed, "dropout"));

    cache.batch = B;
    cache.seq = L;
    cache.layers.assign(cfg.n_layers, {});

    // Token + position embeddings.
    std::vector<int32_t> flat_ids;
    flat_ids.reserve(B * L);
    for (const auto& s : batch) flat_ids.insert(flat_ids.end(), s.ids.begin(), s.ids.end());
    tensor<T> x = embedding_lookup(params.token_embedding, flat_ids);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < L; ++t) {
            T* xr = x.row(b * L + t);
            const T* pe = params.position_embedding.row(t);
            for (std::size_t j = 0; j < D; ++j) xr[j] += pe[j];
        }
    }
    cache.x0 = x;

    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lp = params.layers[l];
        auto& lc = cache.layers[l];
        lc.x_in = x;

        // Attention branch, pre-norm.
        lc.h1 = layer_norm(x, lp.ln1_gain, lp.ln1_bias);
        lc.q = bias_add(matmul(lc.h1, lp.wq), lp.bq);
        lc.k = bias_add(matmul(lc.h1, lp.wk), lp.bk);
        lc.v = bias_add(matmul(lc.h1, lp.wv), lp.bv);

        lc.probs = tensor<T>({B, H, L, L});
        lc.ctx = tensor<T>({B * L, D});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                tensor<T> qb = detail::slice_head(lc.q, b, h, L, DH);
                tensor<T> kb = detail::slice_head(lc.k, b, h, L, DH);
                tensor<T> scores = matmul_nt(qb, kb);
                for (T& s : scores.data) s *= inv_sqrt_dh;
                tensor<T> probs = masked_softmax(scores, batch[b].mask);
                T* dst = lc.probs.data.data() + ((b * H + h) * L * L);
                std::copy(probs.data.begin(), probs.data.end(), dst);
            }
        }
        auto attn_drop = dropout(lc.probs, cfg.dropout_rate, drop_rng, training);
        lc.attn_drop_scale = attn_drop.scale;
        lc.probs_dropped = attn_drop.value;
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                tensor<T> probs({L, L});
                const T* src = lc.probs_dropped.data.data() + ((b * H + h) * L * L);
                std::copy(src, src + L * L, probs.data.begin());
                tensor<T> vb = detail::slice_head(lc.v, b, h, L, DH);
                tensor<T> ctx_b = matmul(probs, vb);
                detail::add_head_slice(lc.ctx, ctx_b, b, h, L, DH);
            }
        }
        tensor<T> attn_out = bias_add(matmul(lc.ctx, lp.wo), lp.bo);
        auto attn_res = dropout(attn_out, cfg.dropout_rate, drop_rng, training);
        lc.attn_res_scale = attn_res.scale;
        tensor<T> x_mid = x;
        accumulate(x_mid, attn_res.value);
        lc.x_mid = x_mid;

        // Feed-forward branch, pre-norm.
        lc.h2 = layer_norm(x_mid, lp.ln2_gain, lp.ln2_bias);
        lc.a1 = bias_add(matmul(lc.h2, lp.w1), lp.b1);
        lc.g1 = gelu(lc.a1);
        tensor<T> ff_out = bias_add(matmul(lc.g1, lp.w2), lp.b2);
        auto ff_res = dropout(ff_out, cfg.dropout_rate, drop_rng, training);
        lc.ff_res_scale = ff_res.scale;
        x = x_mid;
        accumulate(x, ff_res.value);
    }

    cache.x_final = x;
    cache.normed = layer_norm(x, params.final_ln_gain, params.final_ln_bias);

    // Masked mean pooling over real positions, then the output projection.
    cache.pooled_pre = tensor<T>({B, D});
    for (std::size_t b = 0; b < B; ++b) {
        const T inv_n = T(1) / static_cast<T>(batch[b].real_length);
        T* dst = cache.pooled_pre.row(b);
        for (std::size_t t = 0; t < L; ++t) {
            if (!batch[b].mask[t]) continue;
            const T* src = cache.normed.row(b * L + t);
            for (std::size_t j = 0; j < D; ++j) dst[j] += src[j] * inv_n;
        }
    }
    tensor<T> pooled = bias_add(matmul(cache.pooled_pre, params.out_proj), params.out_bias);
    pooled.assert_finite("encode_batch output");
    return pooled;
}

template <class T>
tensor<T> encode_batch(const model_config& cfg, const model_params<T>& params,
                       const std::vector<encoded_sequence>& batch, bool training = false,
                       rng_seed seed = {}) {
    forward_cache<T> cache;
    return encode_batch_cached(cfg, params, batch, training, seed, cache);
}

// ---------------------------------------------------------------------------
// Backward pass: exact reverse of the forward above. `upstream` is the loss
// gradient w.r.t. the pooled embeddings, [batch, d_model].
// ---------------------------------------------------------------------------

template <class T>
model_params<T> encoder_backward(const model_config& cfg, const model_params<T>& params,
                                 const std::vector<encoded_sequence>& batch,
                                 const forward_cache<T>& cache, const tensor<T>& upstream) {
    const std::size_t B = batch.size();
    const std::size_t L = cfg.max_seq;
    const std::size_t D = cfg.d_model;
    const std::size_t H = cfg.n_heads;
    const std::size_t DH = cfg.d_head();
    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(DH)));
    upstream.require_shape({B, D}, "encoder_backward upstream");

    model_params<T> grads = make_param_structure<T>(cfg);

    // Output projection: pooled = pooled_pre * W + b.
    auto [d_pooled_pre, d_out_proj] = matmul_backward(cache.pooled_pre, params.out_proj, upstream);
    grads.out_proj = std::move(d_out_proj);
    grads.out_bias = bias_backward(upstream);

    // Masked mean pooling.
    tensor<T> d_normed({B * L, D});
    for (std::size_t b = 0; b < B; ++b) {
        const T inv_n = T(1) / static_cast<T>(batch[b].real_length);
        const T* src = d_pooled_pre.row(b);
        for (std::size_t t = 0; t < L; ++t) {
            if (!batch[b].mask[t]) continue;
            T* dst = d_normed.row(b * L + t);
            for (std::size_t j = 0; j < D; ++j) dst[j] = src[j] * inv_n;
        }
    }

    // Final layer norm.
    auto final_ln = layer_norm_backward(cache.x_final, params.final_ln_gain, d_normed);
    grads.final_ln_gain = std::move(final_ln.dgain);
    grads.final_ln_bias = std::move(final_ln.dbias);
    tensor<T> dx = std::move(final_ln.dx);

    for (std::size_t l = cfg.n_layers; l-- > 0;) {
        const auto& lp = params.layers[l];
        const auto& lc = cache.layers[l];
        auto& lg = grads.layers[l];

        // x_out = x_mid + drop(ff(ln2(x_mid)))
        tensor<T> d_ff_out = dropout_backward(dx, lc.ff_res_scale);
        lg.b2 = bias_backward(d_ff_out);
        auto [d_g1, d_w2] = matmul_backward(lc.g1, lp.w2, d_ff_out);
        lg.w2 = std::move(d_w2);
        tensor<T> d_a1 = gelu_backward(lc.a1, d_g1);
        lg.b1 = bias_backward(d_a1);
        auto [d_h2, d_w1] = matmul_backward(lc.h2, lp.w1, d_a1);
        lg.w1 = std::move(d_w1);
        auto ln2 = layer_norm_backward(lc.x_mid, lp.ln2_gain, d_h2);
        lg.ln2_gain = std::move(ln2.dgain);
        lg.ln2_bias = std::move(ln2.dbias);
        tensor<T> d_x_mid = std::move(ln2.dx);
        accumulate(d_x_mid, dx);  // residual identity path

        // x_mid = x_in + drop(attn_out)
        tensor<T> d_attn_out = dropout_backward(d_x_mid, lc.attn_res_scale);
        lg.bo = bias_backward(d_attn_out);
        auto [d_ctx, d_wo] = matmul_backward(lc.ctx, lp.wo, d_attn_out);
        lg.wo = std::move(d_wo);

        tensor<T> d_q({B * L, D}), d_k({B * L, D}), d_v({B * L, D});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                tensor<T> probs_dropped({L, L}), probs({L, L});
                const std::size_t off = (b * H + h) * L * L;
                std::copy(lc.probs_dropped.data.begin() + off,
                          lc.probs_dropped.data.begin() + off + L * L,
                          probs_dropped.data.begin());
                std::copy(lc.probs.data.begin() + off, lc.probs.data.begin() + off + L * L,
                          probs.data.begin());
                tensor<T> d_ctx_b = detail::slice_head(d_ctx, b, h, L, DH);
                tensor<T> vb = detail::slice_head(lc.v, b, h, L, DH);
                // ctx_b = probs_dropped * vb
                auto [d_probs_dropped, d_vb] = matmul_backward(probs_dropped, vb, d_ctx_b);
                detail::add_head_slice(d_v, d_vb, b, h, L, DH);
                tensor<T> d_probs = d_probs_dropped;
                if (lc.attn_drop_scale.numel() != 0) {
                    const T* sc = lc.attn_drop_scale.data.data() + off;
                    for (std::size_t i = 0; i < L * L; ++i) d_probs[i] *= sc[i];
                }
                tensor<T> d_scores = masked_softmax_backward(probs, d_probs);
                for (T& s : d_scores.data) s *= inv_sqrt_dh;
                // scores(pre-scale) = qb * kb^T
                tensor<T> qb = detail::slice_head(lc.q, b, h, L, DH);
                tensor<T> kb = detail::slice_head(lc.k, b, h, L, DH);
                tensor<T> d_qb = matmul(d_scores, kb);
                tensor<T> d_kb = matmul_tn(d_scores, qb);
                detail::add_head_slice(d_q, d_qb, b, h, L, DH);
                detail::add_head_slice(d_k, d_kb, b, h, L, DH);
            }
        }

        lg.bq = bias_backward(d_q);
        lg.bk = bias_backward(d_k);
        lg.bv = bias_backward(d_v);
        auto [d_h1_q, d_wq] = matmul_backward(lc.h1, lp.wq, d_q);
        auto [d_h1_k, d_wk] = matmul_backward(lc.h1, lp.wk, d_k);
        auto [d_h1_v, d_wv] = matmul_backward(lc.h1, lp.wv, d_v);
        lg.wq = std::move(d_wq);
        lg.wk = std::move(d_wk);
        lg.wv = std::move(d_wv);
        tensor<T> d_h1 = std::move(d_h1_q);
        accumulate(d_h1, d_h1_k);
        accumulate(d_h1, d_h1_v);
        auto ln1 = layer_norm_backward(lc.x_in, lp.ln1_gain, d_h1);
        lg.ln1_gain = std::move(ln1.dgain);
        lg.ln1_bias = std::move(ln1.dbias);
        dx = std::move(ln1.dx);
        accumulate(dx, d_x_mid);  // residual identity path
    }

    // Embeddings.
    std::vector<int32_t> flat_ids;
    flat_ids.reserve(B * L);
    for (const auto& s : batch) flat_ids.insert(flat_ids.end(), s.ids.begin(), s.ids.end());
    embedding_backward(grads.token_embedding, flat_ids, dx);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < L; ++t) {
            T* dst = grads.position_embedding.row(t);
            const T* src = dx.row(b * L + t);
            for (std::size_t j = 0; j < D; ++j) dst[j] += src[j];
        }
    }
    return grads;
}

// Forward + backward in one call; returns gradients for every parameter.
template <class T>
model_params<T> encode_batch_with_grad(const model_config& cfg, const model_params<T>& params,
                                       const std::vector<encoded_sequence>& batch,
                                       const tensor<T>& upstream, rng_seed seed,
                                       bool training = false) {
    forward_cache<T> cache;
    encode_batch_cached(cfg, params, batch, training, seed, cache);
    return encoder_backward(cfg, params, batch, cache, upstream);
}

}  // namespace asterisk
