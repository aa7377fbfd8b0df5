// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace topi {

// All FLOP counts are exact unsigned 64-bit integers; conversion to GFLOPs
// happens only at display time so table values cannot drift.

enum class CostVariant {
    flux_double,
    flux_single,
    qwen_double,
};

const char* cost_variant_name(CostVariant v);
CostVariant cost_variant_from_name(const std::string& name);

struct CostConfig {
    std::uint64_t n_img = 8192;
    std::uint64_t n_prompt = 512;
    std::uint64_t d = 4096;
    CostVariant variant = CostVariant::flux_double;
    // whole-model context, echoed into reports
    std::uint64_t depth_double = 19;
    std::uint64_t depth_single = 38;
};

// Joint attention core: 4 * (N_img + N_prompt)^2 * d.
std::uint64_t attn_core_flops(std::uint64_t n_img, std::uint64_t n_prompt, std::uint64_t d);

// Per-variant linear (projection + MLP) costs. Double-stream variants split
// into image/text components; the single-stream variant is one fused term
// over all tokens.
struct LinearFlops {
    std::uint64_t image = 0;
    std::uint64_t text = 0;
    std::uint64_t fused = 0;
};

LinearFlops linear_flops(CostVariant variant, std::uint64_t n_img, std::uint64_t n_prompt,
                         std::uint64_t d);

struct FlopsComponent {
    std::string name;
    std::uint64_t baseline = 0;
    std::uint64_t pruned = 0;
};

struct FlopsReport {
    CostVariant variant = CostVariant::flux_double;
    std::uint64_t n_img = 0;
    std::uint64_t pruned_n_img = 0;
    std::uint64_t n_prompt = 0;
    std::uint64_t d = 0;
    std::vector<FlopsComponent> components;
    std::uint64_t total_baseline = 0;
    std::uint64_t total_pruned = 0;
};

// One appendix-style table: per-component baseline and pruned costs for a
// single layer of the variant, plus exact totals.
FlopsReport layer_breakdown(const CostConfig& base, std::uint64_t pruned_n_img);

// Mask-update overhead: scoring modeled as 2 * |L| * |H| * |G| * |C| FLOPs,
// selection as |C| * ceil(log2 |C|) comparisons, amortized over the anchor
// interval.
struct OverheadFlops {
    std::uint64_t scoring = 0;
    std::uint64_t selection = 0;
    double amortized_per_step = 0.0;
};

OverheadFlops overhead_flops(std::uint64_t n_layers, std::uint64_t heads, std::uint64_t n_gen,
                             std::uint64_t n_ref, std::uint64_t interval);

// Display helpers. GFLOPs strings use divisor 1e9 with round-half-to-even at
// two decimals; reductions are percentages at one decimal, also half-even.
std::string format_gflops(std::uint64_t flops);
std::string format_reduction_pct(std::uint64_t baseline, std::uint64_t pruned);

}  // namespace topi
