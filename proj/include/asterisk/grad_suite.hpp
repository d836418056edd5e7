#pragma once

#include <string>
#include <vector>

#include "asterisk/classifier.hpp"
#include "asterisk/distill.hpp"
#include "asterisk/grad_check.hpp"
#include "asterisk/model.hpp"
#include "asterisk/ops.hpp"
#include "asterisk/rng.hpp"

namespace asterisk {

// Finite-difference verification of every backward implementation, all in
// 64-bit so truncation noise stays out of the comparison. Shared by the
// grad-check CLI subcommand and the test suites.

namespace grad_suite_detail {

inline tensor<double> random_tensor(const std::vector<std::size_t>& shape, xoshiro256& gen,
                                    double lo = -1.0, double hi = 1.0) {
    tensor<double> t(shape);
    for (auto& v : t.data) v = gen.uniform(lo, hi);
    return t;
}

inline std::vector<tensor<double>> collect_tensors(model_params<double>& p) {
    std::vector<tensor<double>> out;
    for_each_tensor(p, [&](const std::string&, tensor<double>& t) { out.push_back(t); });
    return out;
}

inline model_params<double> rebuild_params(const model_config& cfg,
                                           const std::vector<tensor<double>>& flat) {
    model_params<double> p = make_param_structure<double>(cfg);
    std::size_t i = 0;
    for_each_tensor(p, [&](const std::string&, tensor<double>& t) { t = flat[i++]; });
    return p;
}

}  // namespace grad_suite_detail

inline std::vector<grad_check_report> run_grad_check_suite() {
    using grad_suite_detail::random_tensor;
    std::vector<grad_check_report> reports;
    xoshiro256 gen(rng_seed{0x9d5c0f2b});

    {
        // matmul, 4x5 * 5x3
        auto a = random_tensor({4, 5}, gen);
        auto b = random_tensor({5, 3}, gen);
        auto upstream = random_tensor({4, 3}, gen);
        auto [da, db] = matmul_backward(a, b, upstream);
        const double err = max_relative_error(
            [](const std::vector<tensor<double>>& in) { return matmul(in[0], in[1]); }, {a, b},
            {da, db}, upstream);
        reports.push_back({"matmul", err, 1e-4});
    }
    {
        auto x = random_tensor({3, 7}, gen, -3.0, 3.0);
        auto upstream = random_tensor({3, 7}, gen);
        const double err = max_relative_error(
            [](const std::vector<tensor<double>>& in) { return gelu(in[0]); }, {x},
            {gelu_backward(x, upstream)}, upstream);
        reports.push_back({"gelu", err, 1e-4});
    }
    {
        auto x = random_tensor({3, 8}, gen);
        auto gain = random_tensor({8}, gen, 0.5, 1.5);
        auto bias = random_tensor({8}, gen, -0.5, 0.5);
        auto upstream = random_tensor({3, 8}, gen);
        auto g = layer_norm_backward(x, gain, upstream);
        const double err = max_relative_error(
            [](const std::vector<tensor<double>>& in) {
                return layer_norm(in[0], in[1], in[2]);
            },
            {x, gain, bias}, {g.dx, g.dgain, g.dbias}, upstream);
        reports.push_back({"layer_norm", err, 1e-4});
    }
    {
        auto logits = random_tensor({4, 6}, gen, -2.0, 2.0);
        const std::vector<uint8_t> mask = {1, 1, 0, 1, 0, 1};
        auto upstream = random_tensor({4, 6}, gen);
        auto probs = masked_softmax(logits, mask);
        const double err = max_relative_error(
            [&mask](const std::vector<tensor<double>>& in) {
                return masked_softmax(in[0], mask);
            },
            {logits}, {masked_softmax_backward(probs, upstream)}, upstream);
        reports.push_back({"masked_softmax", err, 1e-4});
    }
    {
        auto table = random_tensor({7, 4}, gen);
        const std::vector<int32_t> ids = {0, 3, 3, 6, 2};
        auto upstream = random_tensor({5, 4}, gen);
        tensor<double> d_table({7, 4});
        embedding_backward(d_table, ids, upstream);
        const double err = max_relative_error(
            [&ids](const std::vector<tensor<double>>& in) {
                return embedding_lookup(in[0], ids);
            },
            {table}, {d_table}, upstream);
        reports.push_back({"embedding_lookup", err, 1e-4});
    }
    {
        auto x = random_tensor({5, 4}, gen);
        auto b = random_tensor({4}, gen);
        auto upstream = random_tensor({5, 4}, gen);
        const double err = max_relative_error(
            [](const std::vector<tensor<double>>& in) { return bias_add(in[0], in[1]); }, {x, b},
            {upstream, bias_backward(upstream)}, upstream);
        reports.push_back({"bias_add", err, 1e-4});
    }
    {
        // FC head, tiny widths.
        classifier_config ccfg;
        ccfg.input_dim = 6;
        ccfg.hidden = {5, 4};
        ccfg.num_classes = 3;
        auto params = init_classifier<double>(ccfg, rng_seed{77});
        auto x = random_tensor({3, 6}, gen);
        auto upstream = random_tensor({3, 3}, gen);
        classifier_cache<double> cache;
        classifier_forward_cached(params, x, cache);
        auto grads = classifier_backward(params, cache, upstream);
        const double err = max_relative_error(
            [&x](const std::vector<tensor<double>>& in) {
                classifier_params<double> p;
                p.w1 = in[0];
                p.b1 = in[1];
                p.w2 = in[2];
                p.b2 = in[3];
                p.w3 = in[4];
                p.b3 = in[5];
                return classifier_forward(p, x);
            },
            {params.w1, params.b1, params.w2, params.b2, params.w3, params.b3},
            {grads.w1, grads.b1, grads.w2, grads.b2, grads.w3, grads.b3}, upstream);
        reports.push_back({"fc_head", err, 1e-4});
    }
    {
        // Full encoder, tiny config, inference mode (no dropout draws).
        model_config cfg;
        cfg.vocab_size = 10;
        cfg.d_model = 4;
        cfg.n_layers = 1;
        cfg.n_heads = 1;
        cfg.d_ff = 8;
        cfg.max_seq = 8;
        cfg.dropout_rate = 0.0;
        auto params = init_model<double>(cfg, rng_seed{123});

        std::vector<encoded_sequence> batch(2);
        batch[0] = prepare({1, 2, 3, 4, 5}, cfg.max_seq);
        batch[1] = prepare({9, 8, 7, 6, 5, 4, 3, 2}, cfg.max_seq);
        // prepare() pads with the 50258 id; remap pads into the tiny vocab.
        for (auto& seq : batch) {
            for (auto& id : seq.ids) {
                if (id >= static_cast<int32_t>(cfg.vocab_size)) id = 0;
            }
        }
        auto upstream = random_tensor({2, cfg.d_model}, gen);
        auto analytic = encode_batch_with_grad(cfg, params, batch, upstream, rng_seed{5});
        const double err = max_relative_error(
            [&](const std::vector<tensor<double>>& in) {
                model_params<double> p = grad_suite_detail::rebuild_params(cfg, in);
                return encode_batch(cfg, p, batch, /*training=*/false, rng_seed{5});
            },
            grad_suite_detail::collect_tensors(params),
            grad_suite_detail::collect_tensors(analytic), upstream);
        reports.push_back({"encoder_tiny_full", err, 1e-3});
    }
    {
        // Distillation loss w.r.t. the raw student rows.
        auto student = random_tensor({4, 8}, gen, -1.0, 1.0);
        tensor<double> teacher({4, 8});
        for (std::size_t b = 0; b < 4; ++b) {
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < 8; ++j) {
                teacher.at(b, j) = gen.uniform(-1.0, 1.0);
                norm_sq += teacher.at(b, j) * teacher.at(b, j);
            }
            for (std::size_t j = 0; j < 8; ++j) teacher.at(b, j) /= std::sqrt(norm_sq);
        }
        auto res = distill_loss(student, teacher, 0.3);
        tensor<double> unit_upstream({1});
        unit_upstream[0] = 1.0;
        const double err = max_relative_error(
            [&teacher](const std::vector<tensor<double>>& in) {
                tensor<double> out({1});
                out[0] = distill_loss(in[0], teacher, 0.3).total;
                return out;
            },
            {student}, {res.grad}, unit_upstream);
        reports.push_back({"distill_loss", err, 1e-4});
    }
    return reports;
}

}  // namespace asterisk
