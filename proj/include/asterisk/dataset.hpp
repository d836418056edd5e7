#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "asterisk/errors.hpp"

namespace asterisk {

// Corpus input: a directory of files, a plain-text file (whole file is one
// document) or a .jsonl file (one {"text": ...} document per line).

inline std::vector<std::string> load_documents_from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open corpus file: " + path.string());
    }
    std::vector<std::string> docs;
    if (path.extension() == ".jsonl") {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw parse_error(path.string() + " line " + std::to_string(line_no) + ": " +
                                  e.what());
            }
            if (!doc.contains("text") || !doc["text"].is_string()) {
                throw parse_error(path.string() + " line " + std::to_string(line_no) +
                                  ": expected a \"text\" string field");
            }
            docs.push_back(doc["text"].get<std::string>());
        }
    } else {
        std::ostringstream buf;
        buf << in.rdbuf();
        docs.push_back(buf.str());
    }
    return docs;
}

inline std::vector<std::string> load_documents(const std::string& corpus_path) {
    const std::filesystem::path path(corpus_path);
    if (!std::filesystem::exists(path)) {
        throw io_error("corpus path does not exist: " + corpus_path);
    }
    std::vector<std::string> docs;
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension();
            if (ext == ".txt" || ext == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto part = load_documents_from_file(f);
            docs.insert(docs.end(), part.begin(), part.end());
        }
    } else {
        docs = load_documents_from_file(path);
    }
    if (docs.empty()) {
        throw data_error("corpus is empty: " + corpus_path);
    }
    return docs;
}

// Labeled dataset lines: {"text": ..., "label": int} or
// {"embedding": [floats], "label": int}.

struct labeled_example {
    std::optional<std::string> text;
    std::optional<std::vector<float>> embedding;
    int32_t label = 0;
};

inline std::vector<labeled_example> load_labeled_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open dataset: " + path);
    }
    std::vector<labeled_example> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        labeled_example ex;
        if (!doc.contains("label") || !doc["label"].is_number_integer()) {
            throw parse_error(path + " line " + std::to_string(line_no) +
                              ": expected an integer \"label\" field");
        }
        ex.label = doc["label"].get<int32_t>();
        if (doc.contains("text") && doc["text"].is_string()) {
            ex.text = doc["text"].get<std::string>();
        } else if (doc.contains("embedding") && doc["embedding"].is_array()) {
            try {
                ex.embedding = doc["embedding"].get<std::vector<float>>();
            } catch (const nlohmann::json::exception& e) {
                throw parse_error(path + " line " + std::to_string(line_no) + ": " + e.what());
            }
        } else {
            throw parse_error(path + " line " + std::to_string(line_no) +
                              ": expected \"text\" or \"embedding\"");
        }
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) {
        throw data_error("dataset is empty: " + path);
    }
    return examples;
}

// Re-ranking request: {"query": ..., "candidates": [...]} of texts.

struct rerank_request {
    std::string query;
    std::vector<std::string> candidates;
};

inline rerank_request load_rerank_request(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open re-ranking request: " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(path + ": " + e.what());
    }
    rerank_request req;
    if (!doc.contains("query") || !doc["query"].is_string() || !doc.contains("candidates") ||
        !doc["candidates"].is_array()) {
        throw parse_error(path + ": expected {\"query\": string, \"candidates\": [strings]}");
    }
    req.query = doc["query"].get<std::string>();
    for (const auto& c : doc["candidates"]) {
        if (!c.is_string()) {
            throw parse_error(path + ": candidates must be strings");
        }
        req.candidates.push_back(c.get<std::string>());
    }
    if (req.candidates.empty()) {
        throw data_error(path + ": candidate list is empty");
    }
    return req;
}

}  // namespace asterisk
