#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "asterisk/errors.hpp"

namespace asterisk {

// ---------------------------------------------------------------------------
// Cosine similarity, computed in double. The denominator uses a single sqrt
// of the product of squared norms, so cos(v, v) is exactly 1.
// ---------------------------------------------------------------------------

inline double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw shape_error("cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, a_sq = 0.0, b_sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        a_sq += static_cast<double>(a[i]) * a[i];
        b_sq += static_cast<double>(b[i]) * b[i];
    }
    if (a_sq == 0.0 || b_sq == 0.0) {
        throw numeric_error("cosine_similarity: zero vector");
    }
    const double cos = dot / std::sqrt(a_sq * b_sq);
    return std::clamp(cos, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Zero-shot classification against label prototypes.
// ---------------------------------------------------------------------------

struct label_prototype {
    int32_t label = 0;
    std::vector<float> prototype;  // unit-norm embedding of the label description
};

struct zero_shot_result {
    int32_t label = 0;
    std::vector<double> scores;  // cosine per prototype, prototype order
};

inline zero_shot_result zero_shot_classify(const std::vector<float>& embedding,
                                           const std::vector<label_prototype>& prototypes) {
    if (prototypes.size() < 2) {
        throw config_error("zero_shot_classify: need at least 2 prototypes");
    }
    zero_shot_result out;
    out.scores.reserve(prototypes.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < prototypes.size(); ++i) {
        out.scores.push_back(cosine_similarity(embedding, prototypes[i].prototype));
        if (out.scores[i] > out.scores[best]) best = i;
    }
    // Ties resolve toward the lowest label id.
    for (std::size_t i = 0; i < prototypes.size(); ++i) {
        if (out.scores[i] == out.scores[best] && prototypes[i].label < prototypes[best].label) {
            best = i;
        }
    }
    out.label = prototypes[best].label;
    return out;
}

// ---------------------------------------------------------------------------
// Accuracy + confusion counts over a labeled dataset, classifier-agnostic.
// ---------------------------------------------------------------------------

struct classification_report {
    double accuracy = 0.0;
    std::size_t total = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

template <class Classify>
classification_report evaluate_classification(const std::vector<std::vector<float>>& embeddings,
                                               const std::vector<int32_t>& labels,
                                               std::size_t num_classes, Classify&& classify) {
    if (embeddings.empty() || embeddings.size() != labels.size()) {
        throw data_error("evaluate_classification: empty or mismatched dataset");
    }
    classification_report report;
    report.total = embeddings.size();
    report.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const int32_t truth = labels[i];
        if (truth < 0 || static_cast<std::size_t>(truth) >= num_classes) {
            throw data_error("evaluate_classification: label " + std::to_string(truth) +
                             " outside [0, " + std::to_string(num_classes) + ")");
        }
        const int32_t predicted = classify(embeddings[i]);
        if (predicted < 0 || static_cast<std::size_t>(predicted) >= num_classes) {
            throw data_error("evaluate_classification: prediction " + std::to_string(predicted) +
                             " outside [0, " + std::to_string(num_classes) + ")");
        }
        report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)]++;
        if (predicted == truth) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);
    return report;
}

// ---------------------------------------------------------------------------
// Re-ranking: candidates sorted by descending cosine to the query; exact ties
// keep their original index order.
// ---------------------------------------------------------------------------

struct ranked_candidate {
    std::size_t index = 0;
    double score = 0.0;
};

inline std::vector<ranked_candidate> rerank(const std::vector<float>& query,
                                            const std::vector<std::vector<float>>& candidates) {
    if (candidates.empty()) {
        throw data_error("rerank: empty candidate list");
    }
    std::vector<ranked_candidate> ranked;
    ranked.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ranked.push_back({i, cosine_similarity(query, candidates[i])});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ranked_candidate& a, const ranked_candidate& b) {
                         return a.score > b.score;
                     });
    return ranked;
}

// ---------------------------------------------------------------------------
// Pairwise-similarity statistics: the collapse diagnostic. A high mean with a
// small standard deviation across diverse texts is the signature to look for;
// no pass/fail verdict is attached.
// ---------------------------------------------------------------------------

struct similarity_report {
    std::size_t pair_count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::array<std::size_t, 20> histogram{};  // 20 bins over [-1, 1]
};

inline similarity_report make_similarity_report(const std::vector<std::vector<float>>& embeddings) {
    if (embeddings.size() < 2) {
        throw data_error("similarity_report: need at least 2 embeddings");
    }
    similarity_report report;
    std::vector<double> sims;
    sims.reserve(embeddings.size() * (embeddings.size() - 1) / 2);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            sims.push_back(cosine_similarity(embeddings[i], embeddings[j]));
        }
    }
    report.pair_count = sims.size();
    report.min = *std::min_element(sims.begin(), sims.end());
    report.max = *std::max_element(sims.begin(), sims.end());
    double sum = 0.0;
    for (double s : sims) sum += s;
    report.mean = sum / static_cast<double>(sims.size());
    double var = 0.0;
    for (double s : sims) var += (s - report.mean) * (s - report.mean);
    report.stddev = std::sqrt(var / static_cast<double>(sims.size()));
    for (double s : sims) {
        auto bin = static_cast<std::size_t>((s + 1.0) / 2.0 * 20.0);
        if (bin >= 20) bin = 19;  // s == 1.0 lands in the last bin
        report.histogram[bin]++;
    }
    return report;
}

}  // namespace asterisk
