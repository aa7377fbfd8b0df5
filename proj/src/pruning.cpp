// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "topi/errors.hpp"
#include "topi/rng.hpp"

namespace topi {

std::vector<std::size_t> RetentionMask::kept_indices() const {
    std::vector<std::size_t> out;
    out.reserve(k_sel);
    for (std::size_t j = 0; j < keep.size(); ++j) {
        if (keep[j]) {
            out.push_back(j);
        }
    }
    return out;
}

RetentionMask full_mask(std::size_t n_ref, int anchor_timestep) {
    RetentionMask mask;
    mask.keep.assign(n_ref, true);
    mask.k_sel = n_ref;
    mask.anchor_timestep = anchor_timestep;
    return mask;
}

bool AnchorSchedule::contains(int t) const {
    return std::find(anchors.begin(), anchors.end(), t) != anchors.end();
}

AnchorSchedule make_schedule(int steps, int interval) {
    if (steps < 1 || interval < 1) {
        throw config_error("schedule requires steps >= 1 and interval >= 1");
    }
    AnchorSchedule schedule;
    schedule.interval = interval;
    for (int t = steps; t >= 1; t -= interval) {
        schedule.anchors.push_back(t);
    }
    return schedule;
}

AnchorSchedule make_static_schedule(int steps) {
    if (steps < 1) {
        throw config_error("schedule requires steps >= 1");
    }
    AnchorSchedule schedule;
    schedule.interval = steps;  // one anchor; interval is nominal
    schedule.anchors = {steps};
    return schedule;
}

const char* reduction_kind_name(ReductionKind k) {
    return k == ReductionKind::prune ? "prune" : "merge";
}

ReductionKind reduction_kind_from_name(const std::string& name) {
    if (name == "prune") return ReductionKind::prune;
    if (name == "merge") return ReductionKind::merge;
    throw std::invalid_argument("unknown reduction kind: " + name);
}

void PrunerPolicy::validate(std::size_t total_layers) const {
    if (tau < 0.0 || tau > 1.0 || !std::isfinite(tau)) {
        throw config_error("tau must lie in [0, 1]");
    }
    if (schedule.anchors.empty()) {
        throw config_error("schedule has no anchors");
    }
    if (!std::is_sorted(schedule.anchors.rbegin(), schedule.anchors.rend()) ||
        std::adjacent_find(schedule.anchors.begin(), schedule.anchors.end()) !=
            schedule.anchors.end()) {
        throw config_error("anchors must be strictly decreasing");
    }
    if (k_exempt >= total_layers) {
        throw config_error("k_exempt must be smaller than the layer count");
    }
    if (layers.layers.empty()) {
        throw config_error("policy needs at least one representative layer");
    }
    for (int layer : layers.layers) {
        if (layer < 0 || static_cast<std::size_t>(layer) >= total_layers) {
            throw config_error("representative layer index out of range");
        }
    }
}

RetentionMask select_subset(const InfluenceScores& scores, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("select_subset: tau must lie in [0, 1]");
    }
    for (double v : scores.values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("select_subset: scores must be finite");
        }
    }

    const std::size_t n = scores.values.size();
    RetentionMask mask;
    mask.keep.assign(n, false);
    mask.anchor_timestep = scores.timestep;
    if (n == 0) {
        return mask;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores.values[a] != scores.values[b]) {
            return scores.values[a] > scores.values[b];
        }
        return a < b;
    });

    // Total is accumulated in sorted order so the full prefix sum equals it
    // bitwise and tau = 1 always terminates at some K <= n.
    double total = 0.0;
    for (std::size_t idx : order) {
        total += scores.values[idx];
    }

    std::size_t k_sel = 0;
    if (tau == 0.0 || total <= 0.0) {
        k_sel = 1;
    } else {
        const double target = tau * total;
        double prefix = 0.0;
        for (std::size_t rank = 0; rank < n; ++rank) {
            prefix += scores.values[order[rank]];
            if (prefix >= target) {
                k_sel = rank + 1;
                break;
            }
        }
        if (k_sel == 0) {
            k_sel = n;  // guards against pathological rounding
        }
    }

    mask.k_sel = k_sel;
    for (std::size_t rank = 0; rank < k_sel; ++rank) {
        mask.keep[order[rank]] = true;
    }
    return mask;
}

std::pair<Matrix, std::vector<GridPos>> realign_context(const Matrix& h_ref,
                                                        const std::vector<GridPos>& p_ref,
                                                        const RetentionMask& mask) {
    if (mask.keep.size() != h_ref.rows || p_ref.size() != h_ref.rows) {
        throw std::invalid_argument("realign_context: mask/position length mismatch");
    }
    Matrix h_out(mask.k_sel, h_ref.cols);
    std::vector<GridPos> p_out;
    p_out.reserve(mask.k_sel);
    std::size_t dst = 0;
    for (std::size_t j = 0; j < h_ref.rows; ++j) {
        if (!mask.keep[j]) {
            continue;
        }
        std::copy(h_ref.row(j), h_ref.row(j) + h_ref.cols, h_out.row(dst));
        p_out.push_back(p_ref[j]);
        ++dst;
    }
    return {std::move(h_out), std::move(p_out)};
}

std::pair<Matrix, std::vector<GridPos>> merge_context(const Matrix& h_ref,
                                                      const std::vector<GridPos>& p_ref,
                                                      const RetentionMask& mask) {
    if (mask.keep.size() != h_ref.rows || p_ref.size() != h_ref.rows) {
        throw std::invalid_argument("merge_context: mask/position length mismatch");
    }
    if (mask.k_sel == 0 && h_ref.rows > 0) {
        throw std::invalid_argument("merge_context: needs at least one retained token");
    }
    const std::vector<std::size_t> kept = mask.kept_indices();

    // Group members per retained sink, then average each group in one pass.
    std::vector<std::vector<std::size_t>> groups(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        groups[k].push_back(kept[k]);
    }
    for (std::size_t j = 0; j < h_ref.rows; ++j) {
        if (mask.keep[j]) {
            continue;
        }
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < kept.size(); ++k) {
            double dist = 0.0;
            const double* a = h_ref.row(j);
            const double* b = h_ref.row(kept[k]);
            for (std::size_t c = 0; c < h_ref.cols; ++c) {
                const double diff = a[c] - b[c];
                dist += diff * diff;
            }
            if (dist < best_dist) {
                best_dist = dist;
                best = k;
            }
        }
        groups[best].push_back(j);
    }

    Matrix h_out(kept.size(), h_ref.cols);
    std::vector<GridPos> p_out;
    p_out.reserve(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        double* dst = h_out.row(k);
        for (std::size_t member : groups[k]) {
            const double* src = h_ref.row(member);
            for (std::size_t c = 0; c < h_ref.cols; ++c) {
                dst[c] += src[c];
            }
        }
        const double inv = 1.0 / static_cast<double>(groups[k].size());
        for (std::size_t c = 0; c < h_ref.cols; ++c) {
            dst[c] *= inv;
        }
        p_out.push_back(p_ref[kept[k]]);
    }
    return {std::move(h_out), std::move(p_out)};
}

MaskController::MaskController(PrunerPolicy policy, std::size_t n_ref)
    : policy_(std::move(policy)), n_ref_(n_ref) {
    // Alg.-style initialization: keep everything until the first anchor runs.
    current_ = full_mask(n_ref_, policy_.schedule.anchors.empty()
                                     ? 0
                                     : policy_.schedule.anchors.front());
}

const RetentionMask& MaskController::advance(
    int t, const std::function<InfluenceScores()>& scores_provider) {
    if (!is_anchor(t)) {
        return current_;
    }
    InfluenceScores scores = scores_provider();
    if (scores.values.size() != n_ref_) {
        throw std::runtime_error("mask update: score length does not match reference count");
    }
    if (policy_.metric == ScoreMetric::similarity) {
        // Similarity scores may be negative; shift to a zero minimum so the
        // prefix-mass rule stays meaningful. Rank order is unchanged.
        const double lo = *std::min_element(scores.values.begin(), scores.values.end());
        if (lo < 0.0) {
            for (double& v : scores.values) {
                v -= lo;
            }
        }
    }
    scores.timestep = t;
    RetentionMask mask = select_subset(scores, policy_.tau);
    if (policy_.metric == ScoreMetric::random_drop) {
        // Matched-size baseline: keep the greedy K_sel but draw the kept set
        // uniformly at random, deterministically per (seed, anchor).
        const std::size_t k = mask.k_sel;
        Xoshiro256pp rng(policy_.baseline_seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> pool(n_ref_);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t i = 0; i + 1 < pool.size(); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(
                                          rng.next_u64() % static_cast<std::uint64_t>(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        mask.keep.assign(n_ref_, false);
        for (std::size_t i = 0; i < k; ++i) {
            mask.keep[pool[i]] = true;
        }
        mask.k_sel = k;
    }
    current_ = std::move(mask);
    return current_;
}

}  // namespace topi
