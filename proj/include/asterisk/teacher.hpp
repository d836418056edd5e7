#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "asterisk/errors.hpp"
#include "asterisk/rng.hpp"
#include "asterisk/tokenizer.hpp"

namespace asterisk {

inline constexpr std::size_t kTeacherDim = 256;
inline constexpr std::size_t kRemoteEmbeddingDim = 1536;

// Unit-norm 256-d teacher target.
struct teacher_embedding {
    std::vector<float> values;
};

// ---------------------------------------------------------------------------
// MRL truncation: keep the leading components, then renormalize so cosine
// geometry stays comparable.
// ---------------------------------------------------------------------------

inline teacher_embedding mrl_truncate(const std::vector<float>& full,
                                      std::size_t dim = kTeacherDim) {
    if (full.size() < dim) {
        throw data_error("mrl_truncate: input has " + std::to_string(full.size()) +
                         " components, need at least " + std::to_string(dim));
    }
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) norm_sq += static_cast<double>(full[i]) * full[i];
    if (norm_sq == 0.0) {
        throw numeric_error("mrl_truncate: truncated prefix is the zero vector");
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    teacher_embedding out;
    out.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out.values[i] = static_cast<float>(full[i] * inv_norm);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Remote embeddings API client.
// POST <endpoint>/v1/embeddings  {"model": ..., "input": [...]}
// ---------------------------------------------------------------------------

struct remote_teacher_config {
    std::string endpoint;                             // e.g. https://api.openai.com
    std::string model = "text-embedding-3-small";
    std::string credential_env = "EMBEDDINGS_API_KEY";
    int max_attempts = 5;
    int initial_backoff_ms = 250;
    std::size_t expected_dim = kRemoteEmbeddingDim;
};

inline std::vector<std::vector<float>> fetch_remote(const std::vector<std::string>& texts,
                                                    const remote_teacher_config& cfg) {
    if (texts.empty()) {
        throw data_error("fetch_remote: empty batch");
    }
    const char* key = std::getenv(cfg.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw remote_error("credential not found in environment variable " + cfg.credential_env,
                           /*transient=*/false);
    }

    nlohmann::json body;
    body["model"] = cfg.model;
    body["input"] = texts;
    const std::string body_str = body.dump();

    std::string last_failure = "no attempts made";
    int backoff_ms = cfg.initial_backoff_ms;
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(cfg.endpoint);
        client.set_read_timeout(120, 0);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
        auto res = client.Post("/v1/embeddings", headers, body_str, "application/json");
        if (!res) {
            last_failure = "connection failed: " + httplib::to_string(res.error());
            continue;  // transient
        }
        if (res->status == 401 || res->status == 403) {
            throw remote_error("authentication rejected (HTTP " + std::to_string(res->status) + ")",
                               /*transient=*/false);
        }
        if (res->status == 408 || res->status == 429 || res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;  // transient
        }
        if (res->status != 200) {
            throw remote_error("unexpected HTTP status " + std::to_string(res->status) + ": " +
                                   res->body,
                               /*transient=*/false);
        }

        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw remote_error(std::string("malformed response body: ") + e.what(),
                               /*transient=*/false);
        }
        if (!doc.contains("data") || !doc["data"].is_array() || doc["data"].size() != texts.size()) {
            throw remote_error("malformed response: expected " + std::to_string(texts.size()) +
                                   " embeddings",
                               /*transient=*/false);
        }
        std::vector<std::vector<float>> out(texts.size());
        std::vector<bool> filled(texts.size(), false);
        for (std::size_t i = 0; i < doc["data"].size(); ++i) {
            const auto& item = doc["data"][i];
            std::size_t index = i;
            if (item.contains("index") && item["index"].is_number_unsigned()) {
                index = item["index"].get<std::size_t>();
            }
            if (index >= out.size() || filled[index]) {
                throw remote_error("malformed response: bad or duplicate index", false);
            }
            std::vector<float> emb;
            try {
                emb = item.at("embedding").get<std::vector<float>>();
            } catch (const nlohmann::json::exception& e) {
                throw remote_error(std::string("malformed response embedding: ") + e.what(), false);
            }
            if (emb.size() != cfg.expected_dim) {
                throw remote_error("malformed response: embedding has " +
                                       std::to_string(emb.size()) + " dimensions, expected " +
                                       std::to_string(cfg.expected_dim),
                                   /*transient=*/false);
            }
            out[index] = std::move(emb);
            filled[index] = true;
        }
        return out;
    }
    throw remote_error("remote teacher failed after " + std::to_string(cfg.max_attempts) +
                           " attempts; last failure: " + last_failure,
                       /*transient=*/true);
}

// ---------------------------------------------------------------------------
// Content-addressed on-disk cache. One record per (model, text) key:
//   <dir>/<sha256 hex>.f32  =  u32 LE dim || dim * f32 LE payload
// Corrupt records read as misses.
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw error("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

class embedding_cache {
public:
    explicit embedding_cache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    static std::string key_for(const std::string& model, const std::string& text) {
        std::string material;
        material.reserve(model.size() + text.size() + 1);
        material += model;
        material.push_back('\0');
        material += text;
        return sha256_hex(material);
    }

    std::optional<std::vector<float>> get(const std::string& model, const std::string& text) const {
        const auto path = record_path(key_for(model, text));
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() < 4) {
            std::cerr << "warning: corrupt cache record (too short), treating as miss: " << path
                      << "\n";
            return std::nullopt;
        }
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
        const uint32_t dim = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                             (static_cast<uint32_t>(p[2]) << 16) |
                             (static_cast<uint32_t>(p[3]) << 24);
        if (bytes.size() != 4 + static_cast<std::size_t>(dim) * 4) {
            std::cerr << "warning: corrupt cache record (size mismatch), treating as miss: "
                      << path << "\n";
            return std::nullopt;
        }
        std::vector<float> out(dim);
        std::memcpy(out.data(), bytes.data() + 4, static_cast<std::size_t>(dim) * 4);
        return out;
    }

    void put(const std::string& model, const std::string& text,
             const std::vector<float>& values) const {
        const auto path = record_path(key_for(model, text));
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw io_error("cannot write cache record: " + path.string());
            }
            const uint32_t dim = static_cast<uint32_t>(values.size());
            char hdr[4] = {static_cast<char>(dim & 0xFF), static_cast<char>((dim >> 8) & 0xFF),
                           static_cast<char>((dim >> 16) & 0xFF),
                           static_cast<char>((dim >> 24) & 0xFF)};
            out.write(hdr, 4);
            out.write(reinterpret_cast<const char*>(values.data()),
                      static_cast<std::streamsize>(values.size() * 4));
        }
        std::filesystem::rename(tmp, path);
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path record_path(const std::string& key) const {
        return dir_ / (key + ".f32");
    }

    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Synthetic teacher: a deterministic bag-of-tokens projection. Token counts
// over the vocabulary go through a seed-fixed random map to 256-d, then L2
// normalization. Texts with equal token multisets map to equal vectors, which
// is exactly what makes it a checkable offline oracle.
// ---------------------------------------------------------------------------

class synthetic_teacher {
public:
    synthetic_teacher(const vocabulary& vocab, rng_seed seed) : vocab_(&vocab), seed_(seed) {}

    teacher_embedding embed_ids(const std::vector<int32_t>& ids) const {
        if (ids.empty()) {
            throw data_error("synthetic teacher: empty token sequence");
        }
        std::vector<double> acc(kTeacherDim, 0.0);
        // Sort-and-count keeps the result a pure function of the multiset.
        std::vector<int32_t> sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double count = static_cast<double>(j - i);
            xoshiro256 row_gen(derive_seed(seed_, "synthetic-row",
                                           static_cast<uint64_t>(sorted[i])));
            for (std::size_t d = 0; d < kTeacherDim; ++d) {
                acc[d] += count * row_gen.normal();
            }
            i = j;
        }
        double norm_sq = 0.0;
        for (double v : acc) norm_sq += v * v;
        if (norm_sq == 0.0) {
            throw numeric_error("synthetic teacher: zero-norm embedding");
        }
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        teacher_embedding out;
        out.values.resize(kTeacherDim);
        for (std::size_t d = 0; d < kTeacherDim; ++d) {
            out.values[d] = static_cast<float>(acc[d] * inv_norm);
        }
        return out;
    }

    teacher_embedding embed(const std::string& text) const {
        return embed_ids(vocab_->encode(text));
    }

private:
    const vocabulary* vocab_;
    rng_seed seed_;
};

// ---------------------------------------------------------------------------
// Uniform interface the trainer consumes.
// ---------------------------------------------------------------------------

class teacher_oracle {
public:
    virtual ~teacher_oracle() = default;
    virtual std::vector<teacher_embedding> embed_batch(const std::vector<std::string>& texts) = 0;
};

class synthetic_oracle final : public teacher_oracle {
public:
    synthetic_oracle(const vocabulary& vocab, rng_seed seed) : teacher_(vocab, seed) {}

    std::vector<teacher_embedding> embed_batch(const std::vector<std::string>& texts) override {
        std::vector<teacher_embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(teacher_.embed(t));
        return out;
    }

private:
    synthetic_teacher teacher_;
};

class remote_oracle final : public teacher_oracle {
public:
    explicit remote_oracle(remote_teacher_config cfg) : cfg_(std::move(cfg)) {}

    std::vector<teacher_embedding> embed_batch(const std::vector<std::string>& texts) override {
        auto raw = fetch_remote(texts, cfg_);
        std::vector<teacher_embedding> out;
        out.reserve(raw.size());
        for (const auto& v : raw) out.push_back(mrl_truncate(v));
        return out;
    }

private:
    remote_teacher_config cfg_;
};

// Cache wrapper over the remote source. Full-width vectors are cached so any
// smaller truncation stays derivable.
class cached_remote_oracle final : public teacher_oracle {
public:
    cached_remote_oracle(remote_teacher_config cfg, std::filesystem::path cache_dir)
        : cfg_(std::move(cfg)), cache_(std::move(cache_dir)) {}

    std::vector<teacher_embedding> embed_batch(const std::vector<std::string>& texts) override {
        std::vector<teacher_embedding> out(texts.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (auto hit = cache_.get(cfg_.model, texts[i])) {
                out[i] = mrl_truncate(*hit);
            } else {
                missing.push_back(i);
            }
        }
        if (!missing.empty()) {
            std::vector<std::string> to_fetch;
            to_fetch.reserve(missing.size());
            for (std::size_t i : missing) to_fetch.push_back(texts[i]);
            auto fetched = fetch_remote(to_fetch, cfg_);
            for (std::size_t k = 0; k < missing.size(); ++k) {
                cache_.put(cfg_.model, texts[missing[k]], fetched[k]);
                out[missing[k]] = mrl_truncate(fetched[k]);
            }
        }
        return out;
    }

private:
    remote_teacher_config cfg_;
    embedding_cache cache_;
};

}  // namespace asterisk
