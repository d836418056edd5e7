#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "asterisk/adam.hpp"
#include "asterisk/errors.hpp"
#include "asterisk/model.hpp"
#include "asterisk/tensor.hpp"

namespace asterisk {

// Container layout, little-endian throughout:
//   bytes 0..3   magic "ASTR"
//   bytes 4..7   u32 version (currently 1)
//   bytes 8..15  u64 manifest byte length
//   manifest     UTF-8 JSON: {"step": N, "tensors": [{name, shape, dtype,
//                byte_offset}, ...]} in canonical tensor order
//   payload      raw f32 tensor data at the stated offsets
//
// Optimizer moments ride along as "adam.m.<name>" / "adam.v.<name>".

inline constexpr char kCheckpointMagic[4] = {'A', 'S', 'T', 'R'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct named_tensor {
    std::string name;
    tensor<float> value;
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline uint64_t get_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

static_assert(sizeof(float) == 4, "pipeline assumes 32-bit IEEE floats");

}  // namespace detail

inline void save_container(const std::string& path, const std::vector<named_tensor>& tensors,
                           uint64_t step) {
    nlohmann::ordered_json manifest;
    manifest["step"] = step;
    auto& list = manifest["tensors"] = nlohmann::ordered_json::array();
    uint64_t offset = 0;
    for (const auto& nt : tensors) {
        nlohmann::ordered_json entry;
        entry["name"] = nt.name;
        entry["shape"] = nt.value.shape;
        entry["dtype"] = "f32";
        entry["byte_offset"] = offset;
        list.push_back(std::move(entry));
        offset += nt.value.numel() * 4;
    }
    const std::string manifest_str = manifest.dump();

    std::string header;
    header.append(kCheckpointMagic, 4);
    detail::put_u32(header, kCheckpointVersion);
    detail::put_u64(header, manifest_str.size());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error("cannot open checkpoint for writing: " + path);
        }
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        out.write(manifest_str.data(), static_cast<std::streamsize>(manifest_str.size()));
        for (const auto& nt : tensors) {
            out.write(reinterpret_cast<const char*>(nt.value.data.data()),
                      static_cast<std::streamsize>(nt.value.numel() * 4));
        }
        if (!out) {
            throw io_error("short write while saving checkpoint: " + path);
        }
    }
    std::filesystem::rename(tmp, path);
}

struct container_contents {
    std::vector<named_tensor> tensors;
    uint64_t step = 0;

    const tensor<float>* find(const std::string& name) const {
        for (const auto& nt : tensors) {
            if (nt.name == name) return &nt.value;
        }
        return nullptr;
    }
};

inline container_contents load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open checkpoint: " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < 16) {
        throw checkpoint_error(checkpoint_error::code::truncated,
                               "checkpoint shorter than its header: " + path);
    }
    if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw checkpoint_error(checkpoint_error::code::bad_magic,
                               "not a checkpoint file (bad magic): " + path);
    }
    const uint32_t version = detail::get_u32(p + 4);
    if (version != kCheckpointVersion) {
        throw checkpoint_error(checkpoint_error::code::bad_version,
                               "unsupported checkpoint version " + std::to_string(version));
    }
    const uint64_t manifest_len = detail::get_u64(p + 8);
    if (16 + manifest_len > bytes.size()) {
        throw checkpoint_error(checkpoint_error::code::truncated,
                               "manifest extends past end of file: " + path);
    }

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + 16,
                                         bytes.begin() + 16 + static_cast<std::ptrdiff_t>(manifest_len));
    } catch (const nlohmann::json::exception& e) {
        throw checkpoint_error(checkpoint_error::code::manifest_parse,
                               std::string("manifest is not valid JSON: ") + e.what());
    }

    container_contents out;
    const std::size_t payload_begin = 16 + manifest_len;
    const std::size_t payload_size = bytes.size() - payload_begin;
    uint64_t expected_end = 0;
    try {
        out.step = manifest.at("step").get<uint64_t>();
        for (const auto& entry : manifest.at("tensors")) {
            named_tensor nt;
            nt.name = entry.at("name").get<std::string>();
            const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            if (entry.at("dtype").get<std::string>() != "f32") {
                throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                       "unsupported dtype for tensor " + nt.name);
            }
            const uint64_t offset = entry.at("byte_offset").get<uint64_t>();
            nt.value = tensor<float>(shape);
            const uint64_t nbytes = nt.value.numel() * 4;
            if (offset != expected_end) {
                throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                       "tensor " + nt.name + " offset is not contiguous");
            }
            if (offset + nbytes > payload_size) {
                throw checkpoint_error(checkpoint_error::code::truncated,
                                       "tensor " + nt.name + " extends past end of file");
            }
            std::memcpy(nt.value.data.data(), bytes.data() + payload_begin + offset, nbytes);
            expected_end = offset + nbytes;
            out.tensors.push_back(std::move(nt));
        }
    } catch (const checkpoint_error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw checkpoint_error(checkpoint_error::code::manifest_parse,
                               std::string("manifest missing required fields: ") + e.what());
    }
    if (expected_end != payload_size) {
        throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                               "payload size " + std::to_string(payload_size) +
                                   " does not match manifest total " +
                                   std::to_string(expected_end));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model + optimizer state round-trip.
// ---------------------------------------------------------------------------

struct model_opt_state {
    model_params<float> m;
    model_params<float> v;
    uint64_t t = 0;
};

inline model_opt_state make_opt_state(const model_config& cfg) {
    return model_opt_state{make_param_structure<float>(cfg), make_param_structure<float>(cfg), 0};
}

inline void save_model_checkpoint(const std::string& path, const model_params<float>& params,
                                  const model_opt_state& opt, uint64_t step) {
    std::vector<named_tensor> tensors;
    for_each_tensor(params, [&](const std::string& name, const tensor<float>& t) {
        tensors.push_back({name, t});
    });
    for_each_tensor(opt.m, [&](const std::string& name, const tensor<float>& t) {
        tensors.push_back({"adam.m." + name, t});
    });
    for_each_tensor(opt.v, [&](const std::string& name, const tensor<float>& t) {
        tensors.push_back({"adam.v." + name, t});
    });
    save_container(path, tensors, step);
}

struct model_checkpoint {
    model_params<float> params;
    model_opt_state opt;
    uint64_t step = 0;
    model_config inferred;  // n_heads/dropout not stored; caller supplies them
};

// Rebuilds the parameter structure from manifest names and shapes. Heads and
// dropout are not part of the tensor shapes, so the returned config keeps the
// caller-facing defaults for those.
inline model_checkpoint load_model_checkpoint(const std::string& path) {
    container_contents raw = load_container(path);
    const auto require = [&](const std::string& name) -> const tensor<float>& {
        const tensor<float>* t = raw.find(name);
        if (t == nullptr) {
            throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                   "checkpoint missing tensor " + name);
        }
        return *t;
    };

    model_checkpoint out;
    const auto& tok = require("token_embedding");
    const auto& pos = require("position_embedding");
    if (tok.rank() != 2 || pos.rank() != 2) {
        throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                               "embedding tensors must be 2-D");
    }
    model_config cfg;
    cfg.vocab_size = tok.dim(0);
    cfg.d_model = tok.dim(1);
    cfg.max_seq = pos.dim(0);
    cfg.n_layers = 0;
    while (raw.find("layers." + std::to_string(cfg.n_layers) + ".ln1.gain") != nullptr) {
        ++cfg.n_layers;
    }
    if (cfg.n_layers == 0) {
        throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                               "checkpoint has no transformer layers");
    }
    cfg.d_ff = require("layers.0.ff.w1").dim(1);

    out.inferred = cfg;
    out.step = raw.step;
    out.params = make_param_structure<float>(cfg);
    out.opt = make_opt_state(cfg);
    out.opt.t = raw.step;

    bool has_moments = raw.find("adam.m.token_embedding") != nullptr;
    const auto load_into = [&](model_params<float>& dst, const std::string& prefix,
                               bool required) {
        for_each_tensor(dst, [&](const std::string& name, tensor<float>& t) {
            const tensor<float>* src = raw.find(prefix + name);
            if (src == nullptr) {
                if (required) {
                    throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                           "checkpoint missing tensor " + prefix + name);
                }
                return;
            }
            if (src->shape != t.shape) {
                throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                                       "tensor " + prefix + name + " has shape " +
                                           src->shape_string() + ", expected " +
                                           t.shape_string());
            }
            t = *src;
        });
    };
    load_into(out.params, "", true);
    load_into(out.opt.m, "adam.m.", has_moments);
    load_into(out.opt.v, "adam.v.", has_moments);

    const std::size_t expected =
        (has_moments ? 3 : 1) * (2 + cfg.n_layers * 16 + 4);
    if (raw.tensors.size() != expected) {
        throw checkpoint_error(checkpoint_error::code::manifest_mismatch,
                               "checkpoint holds " + std::to_string(raw.tensors.size()) +
                                   " tensors, expected " + std::to_string(expected));
    }
    return out;
}

// Shapes must agree with the runtime config (which also carries n_heads).
inline void validate_against_config(const model_config& cfg, const model_checkpoint& ckpt) {
    cfg.validate();
    if (ckpt.inferred.vocab_size != cfg.vocab_size || ckpt.inferred.d_model != cfg.d_model ||
        ckpt.inferred.n_layers != cfg.n_layers || ckpt.inferred.d_ff != cfg.d_ff ||
        ckpt.inferred.max_seq != cfg.max_seq) {
        throw config_error("checkpoint dimensions do not match the model configuration");
    }
}

}  // namespace asterisk
