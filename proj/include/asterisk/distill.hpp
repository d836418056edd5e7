#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asterisk/adam.hpp"
#include "asterisk/checkpoint.hpp"
#include "asterisk/model.hpp"
#include "asterisk/teacher.hpp"
#include "asterisk/tokenizer.hpp"

namespace asterisk {

struct distill_config {
    double alpha = 0.3;
    std::size_t batch_size = 24;
    double learning_rate = 1e-4;
    std::size_t max_seq = 128;
    double dropout = 0.1;
    std::size_t checkpoint_interval_steps = 100;
    std::size_t epochs = 1;
    std::size_t remainder_floor = 16;  // short final chunks below this are dropped
    rng_seed seed;

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0) {
            throw config_error("distill config: alpha must be in [0, 1], got " +
                               std::to_string(alpha));
        }
        if (batch_size < 1) {
            throw config_error("distill config: batch_size must be >= 1");
        }
        if (checkpoint_interval_steps < 1) {
            throw config_error("distill config: checkpoint interval must be >= 1");
        }
        if (learning_rate <= 0.0) {
            throw config_error("distill config: learning rate must be positive");
        }
        if (dropout < 0.0 || dropout >= 1.0) {
            throw config_error("distill config: dropout must be in [0, 1)");
        }
        if (epochs < 1) {
            throw config_error("distill config: epochs must be >= 1");
        }
    }
};

struct training_metrics {
    uint64_t step = 0;
    double total_loss = 0.0;
    double mse_component = 0.0;
    double cosine_loss_component = 0.0;
    double mean_cosine_similarity = 0.0;
};

// One trainable chunk: fixed-length ids plus the exact decoded text the
// teacher sees.
struct corpus_chunk {
    encoded_sequence seq;
    std::string text;
};

using corpus_stream = std::vector<corpus_chunk>;

// ---------------------------------------------------------------------------
// Corpus chunking: tokenize each document independently (chunks never span
// documents), cut consecutive max_seq-token chunks, keep a padded remainder
// only when it reaches the floor.
// ---------------------------------------------------------------------------

inline corpus_stream chunk_corpus(const std::vector<std::string>& documents,
                                  const vocabulary& vocab, std::size_t max_seq = 128,
                                  std::size_t remainder_floor = 16) {
    corpus_stream chunks;
    for (const auto& doc : documents) {
        const std::vector<int32_t> ids = vocab.encode(doc);
        std::size_t pos = 0;
        while (pos < ids.size()) {
            const std::size_t take = std::min(max_seq, ids.size() - pos);
            if (take < max_seq && take < remainder_floor) break;
            std::vector<int32_t> piece(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                                       ids.begin() + static_cast<std::ptrdiff_t>(pos + take));
            corpus_chunk chunk;
            chunk.seq = prepare(piece, max_seq);
            chunk.text = vocab.decode(piece);
            chunks.push_back(std::move(chunk));
            pos += take;
        }
    }
    if (chunks.empty()) {
        throw data_error("chunk_corpus: corpus produced no usable chunks");
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Blended distillation loss over a batch of student/teacher rows.
//   mse     = mean over batch and components of (s - t)^2
//   cosine  = mean over batch of (1 - cos(s_i, t_i))
//   total   = alpha * mse + (1 - alpha) * cosine
// The gradient is w.r.t. the raw student rows.
// ---------------------------------------------------------------------------

template <class T>
struct distill_loss_result {
    double total = 0.0;
    double mse = 0.0;
    double cosine_loss = 0.0;
    double mean_cosine = 0.0;
    tensor<T> grad;  // [batch, dim]
};

template <class T>
distill_loss_result<T> distill_loss(const tensor<T>& student, const tensor<T>& teacher,
                                    double alpha) {
    if (student.rank() != 2 || !student.same_shape(teacher)) {
        throw shape_error("distill_loss: student " + student.shape_string() + " vs teacher " +
                          teacher.shape_string());
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw config_error("distill_loss: alpha must be in [0, 1]");
    }
    const std::size_t B = student.dim(0);
    const std::size_t D = student.dim(1);

    distill_loss_result<T> res;
    res.grad = tensor<T>({B, D});

    double mse_sum = 0.0;
    double cos_sum = 0.0;
    const double inv_bd = 1.0 / static_cast<double>(B * D);
    const double inv_b = 1.0 / static_cast<double>(B);

    for (std::size_t b = 0; b < B; ++b) {
        const T* s = student.row(b);
        const T* t = teacher.row(b);
        T* g = res.grad.row(b);

        double dot = 0.0, s_sq = 0.0, t_sq = 0.0;
        for (std::size_t j = 0; j < D; ++j) {
            const double sj = s[j], tj = t[j];
            const double diff = sj - tj;
            mse_sum += diff * diff;
            dot += sj * tj;
            s_sq += sj * sj;
            t_sq += tj * tj;
        }
        if (s_sq == 0.0) {
            throw numeric_error("distill_loss: zero-norm student row " + std::to_string(b));
        }
        if (t_sq == 0.0) {
            throw numeric_error("distill_loss: zero-norm teacher row " + std::to_string(b));
        }
        const double s_norm = std::sqrt(s_sq);
        const double t_norm = std::sqrt(t_sq);
        const double cos = dot / (s_norm * t_norm);
        cos_sum += 1.0 - cos;

        // d(mse)/ds_j = 2 (s_j - t_j) / (B*D)
        // d(1 - cos)/ds_j = -(t_j/(|s||t|) - cos * s_j/|s|^2)
        for (std::size_t j = 0; j < D; ++j) {
            const double sj = s[j], tj = t[j];
            const double g_mse = 2.0 * (sj - tj) * inv_bd;
            const double g_cos = -(tj / (s_norm * t_norm) - cos * sj / s_sq) * inv_b;
            g[j] = static_cast<T>(alpha * g_mse + (1.0 - alpha) * g_cos);
        }
    }

    res.mse = mse_sum * inv_bd;
    res.cosine_loss = cos_sum * inv_b;
    res.mean_cosine = 1.0 - res.cosine_loss;
    res.total = alpha * res.mse + (1.0 - alpha) * res.cosine_loss;
    return res;
}

// ---------------------------------------------------------------------------
// One optimizer step: student forward in training mode, teacher targets
// (fetched before any mutation, so a teacher failure leaves parameters
// untouched), loss, full backward, Adam.
// ---------------------------------------------------------------------------

inline training_metrics train_step(const model_config& cfg, model_params<float>& params,
                                   model_opt_state& opt,
                                   const std::vector<const corpus_chunk*>& batch,
                                   teacher_oracle& teacher, const distill_config& dcfg,
                                   uint64_t step) {
    if (batch.empty()) {
        throw data_error("train_step: empty batch");
    }
    std::vector<std::string> texts;
    std::vector<encoded_sequence> seqs;
    texts.reserve(batch.size());
    seqs.reserve(batch.size());
    for (const corpus_chunk* c : batch) {
        texts.push_back(c->text);
        seqs.push_back(c->seq);
    }

    const std::vector<teacher_embedding> targets = teacher.embed_batch(texts);

    tensor<float> teacher_rows({batch.size(), cfg.d_model});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (targets[b].values.size() != cfg.d_model) {
            throw shape_error("train_step: teacher dimension " +
                              std::to_string(targets[b].values.size()) + " vs model " +
                              std::to_string(cfg.d_model));
        }
        std::copy(targets[b].values.begin(), targets[b].values.end(), teacher_rows.row(b));
    }

    const rng_seed step_seed = derive_seed(dcfg.seed, "step", step);
    forward_cache<float> cache;
    tensor<float> student =
        encode_batch_cached(cfg, params, seqs, /*training=*/true, step_seed, cache);

    auto loss = distill_loss(student, teacher_rows, dcfg.alpha);
    model_params<float> grads = encoder_backward(cfg, params, seqs, cache, loss.grad);

    const adam_hyperparams hp{dcfg.learning_rate, 0.9, 0.999, 1e-8};
    opt.t = step;
    // Canonical iteration order is identical for structurally equal sets.
    const auto collect = [](model_params<float>& p) {
        std::vector<tensor<float>*> list;
        for_each_tensor(p, [&](const std::string&, tensor<float>& t) { list.push_back(&t); });
        return list;
    };
    const auto p_list = collect(params);
    const auto g_list = collect(grads);
    const auto m_list = collect(opt.m);
    const auto v_list = collect(opt.v);
    for (std::size_t i = 0; i < p_list.size(); ++i) {
        adam_update(*p_list[i], *g_list[i], *m_list[i], *v_list[i], step, hp);
    }

    training_metrics metrics;
    metrics.step = step;
    metrics.total_loss = loss.total;
    metrics.mse_component = loss.mse;
    metrics.cosine_loss_component = loss.cosine_loss;
    metrics.mean_cosine_similarity = loss.mean_cosine;
    return metrics;
}

// ---------------------------------------------------------------------------
// Training loop. Steps are numbered from 1; the chunk order reshuffles every
// epoch under a seed derived from (config seed, epoch), and per-step dropout
// derives from (config seed, step), so a resumed run replays the exact
// uninterrupted trajectory.
// ---------------------------------------------------------------------------

struct train_result {
    uint64_t final_step = 0;
    std::vector<training_metrics> metrics;
    std::vector<std::string> periodic_checkpoints;
    std::string final_checkpoint;
};

inline uint64_t periodic_checkpoint_count(uint64_t steps, uint64_t interval) {
    if (interval == 0) {
        throw config_error("checkpoint interval must be >= 1");
    }
    return steps / interval;
}

inline std::string checkpoint_filename(uint64_t step) {
    std::ostringstream name;
    name << "checkpoint-" << std::setw(6) << std::setfill('0') << step << ".astr";
    return name.str();
}

template <class StepCallback>
train_result train(const model_config& cfg, model_params<float>& params, model_opt_state& opt,
                   const corpus_stream& corpus, const distill_config& dcfg,
                   teacher_oracle& teacher, const std::string& output_dir, uint64_t start_step,
                   StepCallback&& on_step) {
    dcfg.validate();
    cfg.validate();
    if (corpus.empty()) {
        throw data_error("train: empty corpus");
    }
    std::filesystem::create_directories(output_dir);
    const std::filesystem::path out_dir(output_dir);
    const std::filesystem::path metrics_path = out_dir / "metrics.jsonl";
    std::ofstream metrics_log(metrics_path, start_step == 0 ? std::ios::trunc : std::ios::app);
    if (!metrics_log) {
        throw io_error("cannot open metrics log: " + metrics_path.string());
    }

    const std::size_t steps_per_epoch = (corpus.size() + dcfg.batch_size - 1) / dcfg.batch_size;
    const uint64_t total_steps = static_cast<uint64_t>(steps_per_epoch) * dcfg.epochs;
    if (start_step > total_steps) {
        throw config_error("train: resume step " + std::to_string(start_step) +
                           " is past the end of the schedule (" + std::to_string(total_steps) +
                           ")");
    }

    train_result result;
    result.final_step = start_step;

    std::vector<std::size_t> order(corpus.size());
    for (uint64_t step = start_step + 1; step <= total_steps; ++step) {
        const uint64_t epoch = (step - 1) / steps_per_epoch;
        const std::size_t index_in_epoch = static_cast<std::size_t>((step - 1) % steps_per_epoch);
        if (index_in_epoch == 0 || step == start_step + 1) {
            // (Re)build this epoch's chunk order.
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            xoshiro256 shuffle_rng(derive_seed(dcfg.seed, "shuffle", epoch));
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
            }
        }
        const std::size_t lo = index_in_epoch * dcfg.batch_size;
        const std::size_t hi = std::min(lo + dcfg.batch_size, corpus.size());
        std::vector<const corpus_chunk*> batch;
        batch.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) batch.push_back(&corpus[order[i]]);

        const training_metrics metrics = train_step(cfg, params, opt, batch, teacher, dcfg, step);
        result.metrics.push_back(metrics);

        nlohmann::ordered_json line;
        line["step"] = metrics.step;
        line["loss"] = metrics.total_loss;
        line["mse"] = metrics.mse_component;
        line["cosine_loss"] = metrics.cosine_loss_component;
        line["mean_cos"] = metrics.mean_cosine_similarity;
        metrics_log << line.dump() << "\n";
        metrics_log.flush();

        if (step % dcfg.checkpoint_interval_steps == 0) {
            const auto path = out_dir / checkpoint_filename(step);
            save_model_checkpoint(path.string(), params, opt, step);
            result.periodic_checkpoints.push_back(path.string());
        }
        result.final_step = step;
        on_step(metrics);
    }

    const auto final_path = out_dir / "final.astr";
    save_model_checkpoint(final_path.string(), params, opt, result.final_step);
    result.final_checkpoint = final_path.string();
    return result;
}

inline train_result train(const model_config& cfg, model_params<float>& params,
                          model_opt_state& opt, const corpus_stream& corpus,
                          const distill_config& dcfg, teacher_oracle& teacher,
                          const std::string& output_dir, uint64_t start_step = 0) {
    return train(cfg, params, opt, corpus, dcfg, teacher, output_dir, start_step,
                 [](const training_metrics&) {});
}

}  // namespace asterisk
