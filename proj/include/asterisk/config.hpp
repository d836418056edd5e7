#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <string>

#include <json.hpp>

#include "asterisk/classifier.hpp"
#include "asterisk/distill.hpp"
#include "asterisk/errors.hpp"
#include "asterisk/model.hpp"
#include "asterisk/teacher.hpp"

namespace asterisk {

enum class teacher_kind { synthetic, remote, cached };

struct teacher_source_config {
    teacher_kind kind = teacher_kind::synthetic;
    remote_teacher_config remote;
};

struct run_paths {
    std::string vocab = "data/gpt2/vocab.json";
    std::string merges = "data/gpt2/merges.txt";
    std::string corpus = "data/corpus";
    std::string output_dir = "runs/default";
    std::string cache_dir = "runs/teacher_cache";
};

// Everything a command needs. Field defaults are the shipped hyperparameters;
// a config file only has to name what it overrides. One top-level seed fans
// out to the subsystems through fixed role tags.
struct run_config {
    uint64_t seed = 42;
    model_config model;
    distill_config distill;
    classifier_config classifier;
    teacher_source_config teacher;
    run_paths paths;

    rng_seed init_seed() const { return derive_seed({seed}, "init"); }
    rng_seed distill_seed() const { return derive_seed({seed}, "distill"); }
    rng_seed classifier_seed() const { return derive_seed({seed}, "classifier"); }
    rng_seed teacher_seed() const { return derive_seed({seed}, "teacher"); }

    void finalize() {
        distill.seed = distill_seed();
        classifier.seed = classifier_seed();
        model.validate();
        distill.validate();
        // classifier.num_classes is data-dependent; validated where used.
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const std::string& section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return it.key() == k;
            }) == allowed.end()) {
            throw config_error("config: unknown key \"" + it.key() + "\" in " + section);
        }
    }
}

template <class T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error("config: bad type for \"" + std::string(key) + "\" in " + section);
    }
}

}  // namespace detail

inline run_config parse_run_config(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw config_error("config: top level must be a JSON object");
    }
    detail::check_keys(doc, {"seed", "model", "distill", "classifier", "teacher", "paths"},
                       "top level");
    run_config cfg;
    detail::read_field(doc, "seed", cfg.seed, "top level");

    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        detail::check_keys(
            m, {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_seq", "dropout"},
            "model");
        detail::read_field(m, "vocab_size", cfg.model.vocab_size, "model");
        detail::read_field(m, "d_model", cfg.model.d_model, "model");
        detail::read_field(m, "n_layers", cfg.model.n_layers, "model");
        detail::read_field(m, "n_heads", cfg.model.n_heads, "model");
        detail::read_field(m, "d_ff", cfg.model.d_ff, "model");
        detail::read_field(m, "max_seq", cfg.model.max_seq, "model");
        detail::read_field(m, "dropout", cfg.model.dropout_rate, "model");
    }
    if (doc.contains("distill")) {
        const auto& d = doc.at("distill");
        detail::check_keys(d,
                           {"alpha", "batch_size", "learning_rate", "max_seq", "dropout",
                            "checkpoint_interval_steps", "epochs", "remainder_floor"},
                           "distill");
        detail::read_field(d, "alpha", cfg.distill.alpha, "distill");
        detail::read_field(d, "batch_size", cfg.distill.batch_size, "distill");
        detail::read_field(d, "learning_rate", cfg.distill.learning_rate, "distill");
        detail::read_field(d, "max_seq", cfg.distill.max_seq, "distill");
        detail::read_field(d, "dropout", cfg.distill.dropout, "distill");
        detail::read_field(d, "checkpoint_interval_steps", cfg.distill.checkpoint_interval_steps,
                           "distill");
        detail::read_field(d, "epochs", cfg.distill.epochs, "distill");
        detail::read_field(d, "remainder_floor", cfg.distill.remainder_floor, "distill");
    }
    if (doc.contains("classifier")) {
        const auto& c = doc.at("classifier");
        detail::check_keys(c,
                           {"input_dim", "hidden", "num_classes", "learning_rate", "batch_size",
                            "epochs", "early_stop_patience"},
                           "classifier");
        detail::read_field(c, "input_dim", cfg.classifier.input_dim, "classifier");
        detail::read_field(c, "hidden", cfg.classifier.hidden, "classifier");
        detail::read_field(c, "num_classes", cfg.classifier.num_classes, "classifier");
        detail::read_field(c, "learning_rate", cfg.classifier.learning_rate, "classifier");
        detail::read_field(c, "batch_size", cfg.classifier.batch_size, "classifier");
        detail::read_field(c, "epochs", cfg.classifier.epochs, "classifier");
        detail::read_field(c, "early_stop_patience", cfg.classifier.early_stop_patience,
                           "classifier");
    }
    if (doc.contains("teacher")) {
        const auto& t = doc.at("teacher");
        detail::check_keys(t,
                           {"kind", "endpoint", "model", "credential_env", "max_attempts",
                            "initial_backoff_ms"},
                           "teacher");
        std::string kind = "synthetic";
        detail::read_field(t, "kind", kind, "teacher");
        if (kind == "synthetic") {
            cfg.teacher.kind = teacher_kind::synthetic;
        } else if (kind == "remote") {
            cfg.teacher.kind = teacher_kind::remote;
        } else if (kind == "cached") {
            cfg.teacher.kind = teacher_kind::cached;
        } else {
            throw config_error("config: teacher kind must be synthetic, remote or cached; got \"" +
                               kind + "\"");
        }
        detail::read_field(t, "endpoint", cfg.teacher.remote.endpoint, "teacher");
        detail::read_field(t, "model", cfg.teacher.remote.model, "teacher");
        detail::read_field(t, "credential_env", cfg.teacher.remote.credential_env, "teacher");
        detail::read_field(t, "max_attempts", cfg.teacher.remote.max_attempts, "teacher");
        detail::read_field(t, "initial_backoff_ms", cfg.teacher.remote.initial_backoff_ms,
                           "teacher");
    }
    if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        detail::check_keys(p, {"vocab", "merges", "corpus", "output_dir", "cache_dir"}, "paths");
        detail::read_field(p, "vocab", cfg.paths.vocab, "paths");
        detail::read_field(p, "merges", cfg.paths.merges, "paths");
        detail::read_field(p, "corpus", cfg.paths.corpus, "paths");
        detail::read_field(p, "output_dir", cfg.paths.output_dir, "paths");
        detail::read_field(p, "cache_dir", cfg.paths.cache_dir, "paths");
    }

    cfg.finalize();
    return cfg;
}

inline run_config load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config file: " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("config file " + path + ": " + e.what());
    }
    return parse_run_config(doc);
}

inline nlohmann::ordered_json serialize_run_config(const run_config& cfg) {
    nlohmann::ordered_json doc;
    doc["seed"] = cfg.seed;
    doc["model"] = {{"vocab_size", cfg.model.vocab_size}, {"d_model", cfg.model.d_model},
                    {"n_layers", cfg.model.n_layers},     {"n_heads", cfg.model.n_heads},
                    {"d_ff", cfg.model.d_ff},             {"max_seq", cfg.model.max_seq},
                    {"dropout", cfg.model.dropout_rate}};
    doc["distill"] = {{"alpha", cfg.distill.alpha},
                      {"batch_size", cfg.distill.batch_size},
                      {"learning_rate", cfg.distill.learning_rate},
                      {"max_seq", cfg.distill.max_seq},
                      {"dropout", cfg.distill.dropout},
                      {"checkpoint_interval_steps", cfg.distill.checkpoint_interval_steps},
                      {"epochs", cfg.distill.epochs},
                      {"remainder_floor", cfg.distill.remainder_floor}};
    doc["classifier"] = {{"input_dim", cfg.classifier.input_dim},
                         {"hidden", cfg.classifier.hidden},
                         {"num_classes", cfg.classifier.num_classes},
                         {"learning_rate", cfg.classifier.learning_rate},
                         {"batch_size", cfg.classifier.batch_size},
                         {"epochs", cfg.classifier.epochs},
                         {"early_stop_patience", cfg.classifier.early_stop_patience}};
    const char* kind = cfg.teacher.kind == teacher_kind::synthetic ? "synthetic"
                       : cfg.teacher.kind == teacher_kind::remote  ? "remote"
                                                                   : "cached";
    doc["teacher"] = {{"kind", kind},
                      {"endpoint", cfg.teacher.remote.endpoint},
                      {"model", cfg.teacher.remote.model},
                      {"credential_env", cfg.teacher.remote.credential_env},
                      {"max_attempts", cfg.teacher.remote.max_attempts},
                      {"initial_backoff_ms", cfg.teacher.remote.initial_backoff_ms}};
    doc["paths"] = {{"vocab", cfg.paths.vocab},
                    {"merges", cfg.paths.merges},
                    {"corpus", cfg.paths.corpus},
                    {"output_dir", cfg.paths.output_dir},
                    {"cache_dir", cfg.paths.cache_dir}};
    return doc;
}

inline std::unique_ptr<teacher_oracle> make_teacher(const run_config& cfg,
                                                    const vocabulary& vocab) {
    switch (cfg.teacher.kind) {
        case teacher_kind::synthetic:
            return std::make_unique<synthetic_oracle>(vocab, cfg.teacher_seed());
        case teacher_kind::remote:
            return std::make_unique<remote_oracle>(cfg.teacher.remote);
        case teacher_kind::cached:
            return std::make_unique<cached_remote_oracle>(cfg.teacher.remote,
                                                          cfg.paths.cache_dir);
    }
    throw config_error("config: unhandled teacher kind");
}

}  // namespace asterisk
