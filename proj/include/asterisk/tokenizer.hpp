#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "asterisk/errors.hpp"
#include "asterisk/unicode_tables.hpp"

namespace asterisk {

inline constexpr int32_t kBaseVocabSize = 50257;
inline constexpr int32_t kMaskId = 50257;
inline constexpr int32_t kPadId = 50258;
inline constexpr int32_t kTotalVocabSize = 50259;
inline constexpr std::size_t kMaxSequenceLength = 128;

// ---------------------------------------------------------------------------
// Unicode helpers.
// ---------------------------------------------------------------------------

namespace uni {

template <std::size_t N>
bool in_ranges(const uint32_t (&ranges)[N][2], uint32_t cp) {
    std::size_t lo = 0, hi = N;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cp < ranges[mid][0]) {
            hi = mid;
        } else if (cp > ranges[mid][1]) {
            lo = mid + 1;
        } else {
            return true;
        }
    }
    return false;
}

inline bool is_letter(uint32_t cp) { return in_ranges(unicode_tables::kLetterRanges, cp); }
inline bool is_number(uint32_t cp) { return in_ranges(unicode_tables::kNumberRanges, cp); }
inline bool is_space(uint32_t cp) { return in_ranges(unicode_tables::kSpaceRanges, cp); }

inline void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Malformed bytes decode as their Latin-1 codepoint rather than failing;
// encode() is total over byte strings that way.
inline std::vector<uint32_t> decode_utf8(const std::string& s) {
    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    std::size_t i = 0;
    const auto bad = [&](std::size_t at) { return static_cast<uint32_t>(static_cast<unsigned char>(s[at])); };
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        std::size_t len;
        uint32_t cp;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            cps.push_back(bad(i++));
            continue;
        }
        if (i + len > s.size()) {
            cps.push_back(bad(i++));
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(s[i + k]);
            if ((bk & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!ok) {
            cps.push_back(bad(i++));
            continue;
        }
        cps.push_back(cp);
        i += len;
    }
    return cps;
}

}  // namespace uni

// ---------------------------------------------------------------------------
// Byte <-> printable-codepoint alphabet. Printable bytes map to themselves;
// the rest get 256+n in order, so every byte has a visible stand-in.
// ---------------------------------------------------------------------------

struct byte_alphabet {
    uint32_t byte_to_cp[256];
    std::unordered_map<uint32_t, uint8_t> cp_to_byte;

    byte_alphabet() {
        auto printable = [](int b) {
            return (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
        };
        uint32_t next = 256;
        for (int b = 0; b < 256; ++b) {
            const uint32_t cp = printable(b) ? static_cast<uint32_t>(b) : next++;
            byte_to_cp[b] = cp;
            cp_to_byte.emplace(cp, static_cast<uint8_t>(b));
        }
    }

    static const byte_alphabet& instance() {
        static const byte_alphabet table;
        return table;
    }
};

// ---------------------------------------------------------------------------
// Vocabulary: 50257 base BPE entries plus [MASK]=50257 and [PAD]=50258.
// Immutable after load; encode/decode are pure.
// ---------------------------------------------------------------------------

class vocabulary {
public:
    static constexpr int32_t mask_id = kMaskId;
    static constexpr int32_t pad_id = kPadId;

    static vocabulary load(const std::string& vocab_file, const std::string& merges_file) {
        vocabulary v;
        v.load_vocab_json(vocab_file);
        v.load_merges(merges_file);
        return v;
    }

    int32_t size() const { return kTotalVocabSize; }

    int32_t token_to_id(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? -1 : it->second;
    }

    const std::string& id_to_token(int32_t id) const { return id_to_token_[static_cast<std::size_t>(id)]; }

    // Rank of a merge pair, or max if the pair never merges.
    std::size_t merge_rank(const std::string& a, const std::string& b) const {
        auto it = merge_ranks_.find(pair_key(a, b));
        return it == merge_ranks_.end() ? kNoRank : it->second;
    }

    static constexpr std::size_t kNoRank = std::numeric_limits<std::size_t>::max();

    // ---- encode -----------------------------------------------------------

    std::vector<int32_t> encode(const std::string& text) const {
        std::vector<int32_t> ids;
        const std::vector<uint32_t> cps = uni::decode_utf8(text);
        for_each_piece(cps, [&](std::size_t begin, std::size_t end) {
            encode_piece(cps, begin, end, ids);
        });
        return ids;
    }

    // ---- decode -----------------------------------------------------------

    std::string decode(const std::vector<int32_t>& ids) const {
        const auto& alphabet = byte_alphabet::instance();
        std::string mapped;
        std::string out;
        for (int32_t id : ids) {
            if (id == mask_id) {
                flush_mapped(mapped, out, alphabet);
                out += "[MASK]";
                continue;
            }
            if (id == pad_id) {
                continue;
            }
            if (id < 0 || id >= kBaseVocabSize) {
                throw data_error("decode: token id " + std::to_string(id) + " out of range [0, " +
                                 std::to_string(kPadId) + "]");
            }
            mapped += id_to_token_[static_cast<std::size_t>(id)];
        }
        flush_mapped(mapped, out, alphabet);
        return out;
    }

private:
    std::unordered_map<std::string, int32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::size_t> merge_ranks_;

    // Token strings never contain NUL, so it separates pair halves safely.
    static std::string pair_key(const std::string& a, const std::string& b) {
        std::string k;
        k.reserve(a.size() + b.size() + 1);
        k += a;
        k.push_back('\0');
        k += b;
        return k;
    }

    void load_vocab_json(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw io_error("cannot open vocab file: " + path);
        }
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("vocab file " + path + ": " + e.what());
        }
        if (!doc.is_object()) {
            throw parse_error("vocab file " + path + ": expected a JSON object");
        }
        if (doc.size() != static_cast<std::size_t>(kBaseVocabSize)) {
            throw integrity_error("vocab file " + path + ": expected " +
                                  std::to_string(kBaseVocabSize) + " entries, found " +
                                  std::to_string(doc.size()));
        }
        id_to_token_.assign(kBaseVocabSize, {});
        token_to_id_.reserve(static_cast<std::size_t>(kBaseVocabSize) * 2);
        std::vector<bool> seen(kBaseVocabSize, false);
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (!it.value().is_number_integer()) {
                throw parse_error("vocab file " + path + ": non-integer id for token '" + it.key() + "'");
            }
            const int64_t id = it.value().get<int64_t>();
            if (id < 0 || id >= kBaseVocabSize) {
                throw integrity_error("vocab file " + path + ": id " + std::to_string(id) +
                                      " outside [0, " + std::to_string(kBaseVocabSize - 1) + "]");
            }
            if (seen[static_cast<std::size_t>(id)]) {
                throw integrity_error("vocab file " + path + ": duplicate id " + std::to_string(id));
            }
            seen[static_cast<std::size_t>(id)] = true;
            id_to_token_[static_cast<std::size_t>(id)] = it.key();
            token_to_id_.emplace(it.key(), static_cast<int32_t>(id));
        }
        id_to_token_.push_back("[MASK]");
        id_to_token_.push_back("[PAD]");
    }

    void load_merges(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw io_error("cannot open merges file: " + path);
        }
        std::string line;
        std::size_t line_no = 0;
        std::size_t rank = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_no == 1 && line.rfind("#", 0) == 0) continue;  // header comment
            if (line.empty()) continue;
            const std::size_t space = line.find(' ');
            if (space == std::string::npos || space == 0 || space + 1 >= line.size() ||
                line.find(' ', space + 1) != std::string::npos) {
                throw parse_error("merges file " + path + " line " + std::to_string(line_no) +
                                  ": expected exactly two space-separated tokens");
            }
            merge_ranks_.emplace(pair_key(line.substr(0, space), line.substr(space + 1)), rank++);
        }
        if (rank == 0) {
            throw parse_error("merges file " + path + ": no merge rules found");
        }
    }

    static void flush_mapped(std::string& mapped, std::string& out, const byte_alphabet& alphabet) {
        if (mapped.empty()) return;
        for (uint32_t cp : uni::decode_utf8(mapped)) {
            auto it = alphabet.cp_to_byte.find(cp);
            if (it == alphabet.cp_to_byte.end()) {
                throw integrity_error("decode: token contains codepoint outside the byte alphabet");
            }
            out.push_back(static_cast<char>(it->second));
        }
        mapped.clear();
    }

    // GPT-2 pre-tokenization: contractions, optionally space-prefixed runs of
    // letters / numbers / other, and whitespace runs that leave their final
    // character to prefix the next piece.
    template <class Fn>
    static void for_each_piece(const std::vector<uint32_t>& cps, Fn&& emit) {
        const std::size_t n = cps.size();
        std::size_t i = 0;
        while (i < n) {
            const uint32_t c = cps[i];
            if (c == '\'' && i + 1 < n) {
                const uint32_t c1 = cps[i + 1];
                if (c1 == 's' || c1 == 't' || c1 == 'm' || c1 == 'd') {
                    emit(i, i + 2);
                    i += 2;
                    continue;
                }
                if (i + 2 < n) {
                    const uint32_t c2 = cps[i + 2];
                    if ((c1 == 'r' && c2 == 'e') || (c1 == 'v' && c2 == 'e') ||
                        (c1 == 'l' && c2 == 'l')) {
                        emit(i, i + 3);
                        i += 3;
                        continue;
                    }
                }
            }
            const bool led_space = (c == ' ' && i + 1 < n);
            const std::size_t body = led_space ? i + 1 : i;
            const uint32_t d = cps[body];
            if (uni::is_letter(d)) {
                std::size_t k = body;
                while (k < n && uni::is_letter(cps[k])) ++k;
                emit(i, k);
                i = k;
                continue;
            }
            if (uni::is_number(d)) {
                std::size_t k = body;
                while (k < n && uni::is_number(cps[k])) ++k;
                emit(i, k);
                i = k;
                continue;
            }
            if (!uni::is_space(d)) {
                std::size_t k = body;
                while (k < n && !uni::is_space(cps[k]) && !uni::is_letter(cps[k]) &&
                       !uni::is_number(cps[k])) {
                    ++k;
                }
                emit(i, k);
                i = k;
                continue;
            }
            // Whitespace run; hold the last char back when a non-space follows.
            std::size_t k = i;
            while (k < n && uni::is_space(cps[k])) ++k;
            if (k == n) {
                emit(i, k);
                i = k;
            } else if (k - i == 1) {
                emit(i, i + 1);
                i += 1;
            } else {
                emit(i, k - 1);
                i = k - 1;
            }
        }
    }

    void encode_piece(const std::vector<uint32_t>& cps, std::size_t begin, std::size_t end,
                      std::vector<int32_t>& ids) const {
        const auto& alphabet = byte_alphabet::instance();
        // Piece codepoints -> UTF-8 bytes -> one mapped symbol per byte.
        std::vector<std::string> word;
        std::string utf8;
        for (std::size_t i = begin; i < end; ++i) {
            utf8.clear();
            uni::append_utf8(utf8, cps[i]);
            for (char raw : utf8) {
                const uint32_t mapped = alphabet.byte_to_cp[static_cast<unsigned char>(raw)];
                std::string sym;
                uni::append_utf8(sym, mapped);
                word.push_back(std::move(sym));
            }
        }
        // Merge the lowest-ranked adjacent pair until none ranks.
        while (word.size() >= 2) {
            std::size_t best_rank = vocabulary::kNoRank;
            std::size_t best_pos = 0;
            for (std::size_t i = 0; i + 1 < word.size(); ++i) {
                const std::size_t r = merge_rank(word[i], word[i + 1]);
                if (r < best_rank) {
                    best_rank = r;
                    best_pos = i;
                }
            }
            if (best_rank == vocabulary::kNoRank) break;
            const std::string first = word[best_pos];
            const std::string second = word[best_pos + 1];
            // Merge every occurrence of the winning pair, left to right.
            std::vector<std::string> merged;
            merged.reserve(word.size());
            std::size_t i = 0;
            while (i < word.size()) {
                if (i + 1 < word.size() && word[i] == first && word[i + 1] == second) {
                    merged.push_back(first + second);
                    i += 2;
                } else {
                    merged.push_back(std::move(word[i]));
                    i += 1;
                }
            }
            word = std::move(merged);
        }
        for (const std::string& sym : word) {
            const int32_t id = token_to_id(sym);
            if (id < 0) {
                throw integrity_error("encode: symbol missing from vocabulary");
            }
            ids.push_back(id);
        }
    }
};

// Convenience wrapper mirroring the file-pair loader.
inline vocabulary load_vocabulary(const std::string& vocab_file, const std::string& merges_file) {
    return vocabulary::load(vocab_file, merges_file);
}

// ---------------------------------------------------------------------------
// Fixed-length model input.
// ---------------------------------------------------------------------------

struct encoded_sequence {
    std::vector<int32_t> ids;    // exactly max_len entries, pad_id beyond real_length
    std::vector<uint8_t> mask;   // 1 for real tokens
    std::size_t real_length = 0;

    std::size_t length() const { return ids.size(); }
};

inline encoded_sequence prepare(const std::vector<int32_t>& raw_ids,
                                std::size_t max_len = kMaxSequenceLength) {
    if (raw_ids.empty()) {
        throw data_error("prepare: input must contain at least one token");
    }
    for (int32_t id : raw_ids) {
        if (id == kMaskId || id == kPadId) {
            throw data_error("prepare: input must not contain special token ids");
        }
        if (id < 0 || id >= kTotalVocabSize) {
            throw data_error("prepare: token id " + std::to_string(id) + " out of range");
        }
    }
    encoded_sequence seq;
    seq.real_length = std::min(raw_ids.size(), max_len);
    seq.ids.assign(raw_ids.begin(), raw_ids.begin() + static_cast<std::ptrdiff_t>(seq.real_length));
    seq.ids.resize(max_len, kPadId);
    seq.mask.assign(max_len, 0);
    std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(seq.real_length), 1);
    return seq;
}

}  // namespace asterisk
