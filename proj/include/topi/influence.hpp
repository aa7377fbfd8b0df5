// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "topi/model.hpp"

namespace topi {

enum class ScoreMetric {
    influence,
    attn_only,
    similarity,
    random_drop,
};

const char* score_metric_name(ScoreMetric m);
ScoreMetric score_metric_from_name(const std::string& name);

// Per-reference-token retention scores at one timestep. influence and
// attn_only entries are >= 0 by construction; similarity entries may be
// negative (they are shifted before subset selection).
struct InfluenceScores {
    std::vector<double> values;
    ScoreMetric kind = ScoreMetric::influence;
    std::vector<int> layers;
    int timestep = 0;

    double total() const;
};

// Contribution magnitudes ||A_ij * v_j|| = A_ij * ||v_j|| for one capture,
// flattened as [head][i][j] to match AttentionCapture::a indexing.
std::vector<double> contribution_norms(const AttentionCapture& capture);

// Token influence: I_j = sum over layers and heads of ||v_j|| times the
// attention mass token j receives from all noisy queries.
// `captures` must cover exactly the layer set `layers` (std::runtime_error
// otherwise); extra captured layers are rejected too.
InfluenceScores influence_scores(const std::vector<AttentionCapture>& captures,
                                 const std::vector<int>& layers, int timestep);

// attn_only drops the value-norm factor; similarity scores tokens by negated
// mean pairwise cosine similarity of the captured layer-input hidden states
// (highly redundant tokens score lowest), averaged across the layer set.
InfluenceScores baseline_scores(ScoreMetric kind, const std::vector<AttentionCapture>& captures,
                                const std::vector<int>& layers, int timestep);

}  // namespace topi
