// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/analysis.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace topi {

std::vector<double> target_aware_score(const AttentionCapture& capture) {
    if (capture.n_noisy == 0 || capture.heads == 0) {
        throw std::invalid_argument("target_aware_score: capture has no noisy queries");
    }
    std::vector<double> s(capture.n_ref, 0.0);
    for (std::size_t h = 0; h < capture.heads; ++h) {
        for (std::size_t i = 0; i < capture.n_noisy; ++i) {
            for (std::size_t j = 0; j < capture.n_ref; ++j) {
                s[j] += capture.a(h, i, j);
            }
        }
    }
    const double inv =
        1.0 / (static_cast<double>(capture.n_noisy) * static_cast<double>(capture.heads));
    for (double& v : s) {
        v *= inv;
    }
    return s;
}

AttentionProfile build_profile(const TrajectoryRecord& record) {
    AttentionProfile profile;

    // Collect totals per (layer, timestep) grid point.
    std::map<int, std::pair<double, std::size_t>> by_layer;   // layer -> (sum, count)
    std::size_t full_ref = 0;
    for (const StepRecord& step : record.steps) {
        full_ref = std::max(full_ref, step.retained);
    }

    for (const StepRecord& step : record.steps) {
        double step_sum = 0.0;
        std::size_t step_count = 0;
        for (const StepCaptureSummary& cap : step.captures) {
            auto& acc = by_layer[cap.layer];
            acc.first += cap.total;
            acc.second += 1;
            step_sum += cap.total;
            step_count += 1;
            if (cap.s_j.size() == full_ref) {
                profile.token_series.push_back({step.timestep, cap.layer, cap.s_j});
            }
        }
        profile.timesteps.push_back(step.timestep);
        profile.step_totals.push_back(step_count > 0 ? step_sum / static_cast<double>(step_count)
                                                     : 0.0);
    }

    for (const auto& [layer, acc] : by_layer) {
        profile.layers.push_back(layer);
        profile.layer_totals.push_back(acc.second > 0 ? acc.first / static_cast<double>(acc.second)
                                                      : 0.0);
    }
    return profile;
}

std::vector<std::pair<int, double>> layer_profile(const TrajectoryRecord& record) {
    const AttentionProfile profile = build_profile(record);
    std::vector<std::pair<int, double>> out;
    out.reserve(profile.layers.size());
    for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        out.emplace_back(profile.layers[i], profile.layer_totals[i]);
    }
    return out;
}

std::vector<std::pair<int, double>> temporal_profile(const TrajectoryRecord& record) {
    const AttentionProfile profile = build_profile(record);
    std::vector<std::pair<int, double>> out;
    out.reserve(profile.timesteps.size());
    for (std::size_t i = 0; i < profile.timesteps.size(); ++i) {
        out.emplace_back(profile.timesteps[i], profile.step_totals[i]);
    }
    return out;
}

}  // namespace topi
