// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/flops.hpp"

#include <bit>
#include <stdexcept>

namespace topi {

const char* cost_variant_name(CostVariant v) {
    switch (v) {
        case CostVariant::flux_double: return "flux_double";
        case CostVariant::flux_single: return "flux_single";
        case CostVariant::qwen_double: return "qwen_double";
    }
    return "unknown";
}

CostVariant cost_variant_from_name(const std::string& name) {
    if (name == "flux_double") return CostVariant::flux_double;
    if (name == "flux_single") return CostVariant::flux_single;
    if (name == "qwen_double") return CostVariant::qwen_double;
    throw std::invalid_argument("unknown cost variant: " + name);
}

std::uint64_t attn_core_flops(std::uint64_t n_img, std::uint64_t n_prompt, std::uint64_t d) {
    const std::uint64_t n = n_img + n_prompt;
    return 4 * n * n * d;
}

LinearFlops linear_flops(CostVariant variant, std::uint64_t n_img, std::uint64_t n_prompt,
                         std::uint64_t d) {
    LinearFlops out;
    switch (variant) {
        case CostVariant::flux_double:
            out.image = 24 * n_img * d * d;
            out.text = 24 * n_prompt * d * d;
            break;
        case CostVariant::qwen_double:
            out.image = 32 * n_img * d * d;
            out.text = 32 * n_prompt * d * d;
            break;
        case CostVariant::flux_single:
            out.fused = 24 * (n_img + n_prompt) * d * d;
            break;
    }
    return out;
}

FlopsReport layer_breakdown(const CostConfig& base, std::uint64_t pruned_n_img) {
    if (pruned_n_img > base.n_img) {
        throw std::invalid_argument("layer_breakdown: pruned token count exceeds baseline");
    }
    FlopsReport report;
    report.variant = base.variant;
    report.n_img = base.n_img;
    report.pruned_n_img = pruned_n_img;
    report.n_prompt = base.n_prompt;
    report.d = base.d;

    const std::uint64_t attn_base = attn_core_flops(base.n_img, base.n_prompt, base.d);
    const std::uint64_t attn_pruned = attn_core_flops(pruned_n_img, base.n_prompt, base.d);
    report.components.push_back({"attn_core", attn_base, attn_pruned});

    const LinearFlops lin_base = linear_flops(base.variant, base.n_img, base.n_prompt, base.d);
    const LinearFlops lin_pruned = linear_flops(base.variant, pruned_n_img, base.n_prompt, base.d);
    if (base.variant == CostVariant::flux_single) {
        report.components.push_back({"fused_linear", lin_base.fused, lin_pruned.fused});
    } else {
        report.components.push_back({"img_linear", lin_base.image, lin_pruned.image});
        report.components.push_back({"txt_linear", lin_base.text, lin_pruned.text});
    }

    for (const FlopsComponent& c : report.components) {
        report.total_baseline += c.baseline;
        report.total_pruned += c.pruned;
    }
    return report;
}

OverheadFlops overhead_flops(std::uint64_t n_layers, std::uint64_t heads, std::uint64_t n_gen,
                             std::uint64_t n_ref, std::uint64_t interval) {
    if (n_layers < 1 || heads < 1 || n_gen < 1 || n_ref < 1 || interval < 1) {
        throw std::invalid_argument("overhead_flops: all counts must be >= 1");
    }
    OverheadFlops out;
    out.scoring = 2 * n_layers * heads * n_gen * n_ref;
    const std::uint64_t log_term =
        n_ref == 1 ? 0 : static_cast<std::uint64_t>(std::bit_width(n_ref - 1));
    out.selection = n_ref * log_term;
    out.amortized_per_step =
        static_cast<double>(out.scoring + out.selection) / static_cast<double>(interval);
    return out;
}

namespace {

// Round num/den to the nearest integer, ties to even. den > 0.
std::uint64_t round_rational_half_even(std::uint64_t num, std::uint64_t den) {
    const std::uint64_t q = num / den;
    const std::uint64_t r = num % den;
    if (2 * r > den) {
        return q + 1;
    }
    if (2 * r < den) {
        return q;
    }
    return q + (q % 2);  // exact half: round to even
}

}  // namespace

std::string format_gflops(std::uint64_t flops) {
    // hundredths of a GFLOP = flops / 1e7, rounded half-even
    const std::uint64_t hundredths = round_rational_half_even(flops, 10000000ULL);
    const std::uint64_t whole = hundredths / 100;
    const std::uint64_t frac = hundredths % 100;
    std::string out = std::to_string(whole) + ".";
    if (frac < 10) {
        out += "0";
    }
    out += std::to_string(frac);
    return out;
}

std::string format_reduction_pct(std::uint64_t baseline, std::uint64_t pruned) {
    if (baseline == 0 || pruned >= baseline) {
        return "0.0";
    }
    // tenths of a percent = (baseline - pruned) * 1000 / baseline
    const std::uint64_t tenths = round_rational_half_even((baseline - pruned) * 1000ULL, baseline);
    if (tenths == 0) {
        return "0.0";
    }
    return "-" + std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

}  // namespace topi
