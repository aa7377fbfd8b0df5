// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "topi/calibration.hpp"
#include "topi/influence.hpp"

namespace topi {

// Boolean keep-set over the ORIGINAL reference token indices, together with
// the anchor timestep that produced it.
struct RetentionMask {
    std::vector<bool> keep;
    std::size_t k_sel = 0;
    int anchor_timestep = 0;

    std::vector<std::size_t> kept_indices() const;

    friend bool operator==(const RetentionMask& a, const RetentionMask& b) {
        return a.keep == b.keep && a.k_sel == b.k_sel && a.anchor_timestep == b.anchor_timestep;
    }
};

RetentionMask full_mask(std::size_t n_ref, int anchor_timestep);

// Strictly decreasing anchor timesteps; the first denoising step (t = steps)
// is always an anchor so the initial mask is computed from full context.
struct AnchorSchedule {
    std::vector<int> anchors;
    int interval = 0;

    bool contains(int t) const;
};

// Dynamic schedule {T, T-dt, T-2dt, ...} down to 1.
AnchorSchedule make_schedule(int steps, int interval);
// Static ablation: one anchor at t = T.
AnchorSchedule make_static_schedule(int steps);

enum class ReductionKind {
    prune,
    merge,
};

const char* reduction_kind_name(ReductionKind k);
ReductionKind reduction_kind_from_name(const std::string& name);

struct PrunerPolicy {
    double tau = 0.85;
    AnchorSchedule schedule;
    RepresentativeLayers layers;
    ScoreMetric metric = ScoreMetric::influence;
    ReductionKind reduction = ReductionKind::prune;
    std::size_t k_exempt = 3;
    // seeds the matched-size random keep-set of the random_drop baseline
    std::uint64_t baseline_seed = 0;

    // Throws config_error against a concrete model shape.
    void validate(std::size_t total_layers) const;
};

// Greedy prefix selection: sort scores descending (ties -> lower index) and
// keep the shortest prefix whose mass reaches tau * total. tau = 0 or an
// all-zero score vector clamps to a single kept token so attention never
// runs with an empty context.
RetentionMask select_subset(const InfluenceScores& scores, double tau);

// Synchronized gather: hidden rows and grid positions of kept tokens, in
// original relative order.
std::pair<Matrix, std::vector<GridPos>> realign_context(const Matrix& h_ref,
                                                        const std::vector<GridPos>& p_ref,
                                                        const RetentionMask& mask);

// Merge baseline: every pruned token's state joins the unweighted mean of its
// nearest retained neighbor (Euclidean distance in hidden-state space, ties
// -> lower retained index); retained positions pass through unchanged.
std::pair<Matrix, std::vector<GridPos>> merge_context(const Matrix& h_ref,
                                                      const std::vector<GridPos>& p_ref,
                                                      const RetentionMask& mask);

// Owns the piecewise-constant mask trajectory: recompute at anchors from
// freshly provided scores, carry the previous mask everywhere else.
class MaskController {
public:
    MaskController(PrunerPolicy policy, std::size_t n_ref);

    bool is_anchor(int t) const { return policy_.schedule.contains(t); }
    const RetentionMask& current() const { return current_; }
    const PrunerPolicy& policy() const { return policy_; }

    // scores_provider is only invoked at anchor timesteps.
    const RetentionMask& advance(int t, const std::function<InfluenceScores()>& scores_provider);

private:
    PrunerPolicy policy_;
    std::size_t n_ref_;
    RetentionMask current_;
};

}  // namespace topi
