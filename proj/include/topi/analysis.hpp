// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "topi/engine.hpp"
#include "topi/model.hpp"

namespace topi {

// Target-aware attention score per reference token: the mean attention the
// token receives from every noisy query across heads,
// S_j = (1 / (|G| * |H|)) * sum_h sum_i A[h][i][j].
std::vector<double> target_aware_score(const AttentionCapture& capture);

// Aggregations over a recorded trajectory's capture summaries. Layer and
// step profiles report the TOTAL reference attention share sum_j S_j,
// averaged across the other axis.
struct AttentionProfile {
    std::vector<int> layers;                // ascending
    std::vector<double> layer_totals;       // mean over steps, aligned to layers
    std::vector<int> timesteps;             // execution order (T down to 1)
    std::vector<double> step_totals;        // mean over layers, aligned to timesteps
    // Per-token series from full-context captures only: one row per recorded
    // (timestep, layer), token scores in original reference order.
    struct TokenSeriesRow {
        int timestep = 0;
        int layer = 0;
        std::vector<double> s_j;
    };
    std::vector<TokenSeriesRow> token_series;
};

AttentionProfile build_profile(const TrajectoryRecord& record);

// Convenience accessors over build_profile.
std::vector<std::pair<int, double>> layer_profile(const TrajectoryRecord& record);
std::vector<std::pair<int, double>> temporal_profile(const TrajectoryRecord& record);

}  // namespace topi
