// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace topi {

const char* score_metric_name(ScoreMetric m) {
    switch (m) {
        case ScoreMetric::influence: return "influence";
        case ScoreMetric::attn_only: return "attn_only";
        case ScoreMetric::similarity: return "similarity";
        case ScoreMetric::random_drop: return "random_drop";
    }
    return "unknown";
}

ScoreMetric score_metric_from_name(const std::string& name) {
    if (name == "influence") return ScoreMetric::influence;
    if (name == "attn_only") return ScoreMetric::attn_only;
    if (name == "similarity") return ScoreMetric::similarity;
    if (name == "random_drop") return ScoreMetric::random_drop;
    throw std::invalid_argument("unknown score metric: " + name);
}

double InfluenceScores::total() const {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

std::vector<double> contribution_norms(const AttentionCapture& capture) {
    std::vector<double> out(capture.attn.size(), 0.0);
    for (std::size_t h = 0; h < capture.heads; ++h) {
        for (std::size_t i = 0; i < capture.n_noisy; ++i) {
            for (std::size_t j = 0; j < capture.n_ref; ++j) {
                out[(h * capture.n_noisy + i) * capture.n_ref + j] =
                    capture.a(h, i, j) * capture.vnorm(h, j);
            }
        }
    }
    return out;
}

namespace {

// Captures must match the layer set exactly, in any order.
std::vector<const AttentionCapture*> resolve_layers(const std::vector<AttentionCapture>& captures,
                                                    const std::vector<int>& layers) {
    if (captures.size() != layers.size()) {
        throw std::runtime_error("score captures do not match the requested layer set");
    }
    std::vector<const AttentionCapture*> out;
    out.reserve(layers.size());
    for (int layer : layers) {
        const AttentionCapture* found = nullptr;
        for (const auto& c : captures) {
            if (c.layer == layer) {
                found = &c;
                break;
            }
        }
        if (found == nullptr) {
            throw std::runtime_error("missing capture for layer " + std::to_string(layer));
        }
        out.push_back(found);
    }
    return out;
}

std::vector<double> attention_mass(const AttentionCapture& c, bool weight_by_vnorm) {
    std::vector<double> per_token(c.n_ref, 0.0);
    for (std::size_t h = 0; h < c.heads; ++h) {
        for (std::size_t j = 0; j < c.n_ref; ++j) {
            double mass = 0.0;
            for (std::size_t i = 0; i < c.n_noisy; ++i) {
                mass += c.a(h, i, j);
            }
            per_token[j] += weight_by_vnorm ? c.vnorm(h, j) * mass : mass;
        }
    }
    return per_token;
}

std::vector<double> similarity_scores(const std::vector<const AttentionCapture*>& captures) {
    const std::size_t n = captures.front()->n_ref;
    std::vector<double> out(n, 0.0);
    for (const AttentionCapture* c : captures) {
        const Matrix& h = c->ref_hidden;
        if (h.rows != n) {
            throw std::runtime_error("similarity: capture lacks reference hidden states");
        }
        const std::vector<double> norms = row_l2_norms(h);
        for (std::size_t j = 0; j < n; ++j) {
            double mean_cos = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) continue;
                double dot = 0.0;
                for (std::size_t col = 0; col < h.cols; ++col) {
                    dot += h.at(j, col) * h.at(k, col);
                }
                const double denom = norms[j] * norms[k];
                mean_cos += denom > 0.0 ? dot / denom : 0.0;
            }
            if (n > 1) {
                mean_cos /= static_cast<double>(n - 1);
            }
            out[j] += -mean_cos;
        }
    }
    for (double& v : out) {
        v /= static_cast<double>(captures.size());
    }
    return out;
}

}  // namespace

InfluenceScores influence_scores(const std::vector<AttentionCapture>& captures,
                                 const std::vector<int>& layers, int timestep) {
    const auto resolved = resolve_layers(captures, layers);
    InfluenceScores scores;
    scores.kind = ScoreMetric::influence;
    scores.layers = layers;
    scores.timestep = timestep;
    scores.values.assign(resolved.front()->n_ref, 0.0);
    for (const AttentionCapture* c : resolved) {
        const std::vector<double> term = attention_mass(*c, /*weight_by_vnorm=*/true);
        if (term.size() != scores.values.size()) {
            throw std::runtime_error("influence: captures disagree on reference count");
        }
        for (std::size_t j = 0; j < term.size(); ++j) {
            scores.values[j] += term[j];
        }
    }
    return scores;
}

InfluenceScores baseline_scores(ScoreMetric kind, const std::vector<AttentionCapture>& captures,
                                const std::vector<int>& layers, int timestep) {
    const auto resolved = resolve_layers(captures, layers);
    InfluenceScores scores;
    scores.kind = kind;
    scores.layers = layers;
    scores.timestep = timestep;
    if (kind == ScoreMetric::attn_only) {
        scores.values.assign(resolved.front()->n_ref, 0.0);
        for (const AttentionCapture* c : resolved) {
            const std::vector<double> term = attention_mass(*c, /*weight_by_vnorm=*/false);
            for (std::size_t j = 0; j < term.size(); ++j) {
                scores.values[j] += term[j];
            }
        }
    } else if (kind == ScoreMetric::similarity) {
        scores.values = similarity_scores(resolved);
    } else {
        throw std::invalid_argument("baseline_scores handles attn_only and similarity only");
    }
    return scores;
}

}  // namespace topi
