#pragma once

#include <stdexcept>
#include <string>

namespace asterisk {

// Base for everything this library throws.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shape disagreement.
struct shape_error : error {
    using error::error;
};

// Malformed input file (vocab, merges, config, dataset).
struct parse_error : error {
    using error::error;
};

// Well-formed input that violates a structural contract (counts, ranges).
struct integrity_error : error {
    using error::error;
};

// Invalid configuration value.
struct config_error : error {
    using error::error;
};

// Bad runtime data (empty batch, label out of range, id out of range).
struct data_error : error {
    using error::error;
};

// Filesystem trouble.
struct io_error : error {
    using error::error;
};

// NaN/Inf or degenerate numeric state (zero-norm vector where a norm is required).
struct numeric_error : error {
    using error::error;
};

// Remote teacher failures carry whether a retry could ever help.
struct remote_error : error {
    bool transient;
    remote_error(const std::string& msg, bool transient_) : error(msg), transient(transient_) {}
};

// Checkpoint load failures, one code per distinct failure mode.
struct checkpoint_error : error {
    enum class code { bad_magic, bad_version, truncated, manifest_parse, manifest_mismatch };
    code kind;
    checkpoint_error(code kind_, const std::string& msg) : error(msg), kind(kind_) {}
};

}  // namespace asterisk
