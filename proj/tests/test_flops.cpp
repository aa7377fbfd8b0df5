// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <string>

#include "topi/flops.hpp"

using topi::CostConfig;
using topi::CostVariant;
using topi::FlopsReport;

namespace {

constexpr std::uint64_t kD = 4096;
constexpr std::uint64_t kD2 = kD * kD;
constexpr std::uint64_t kNImg = 8192;
constexpr std::uint64_t kNPrompt = 512;
constexpr std::uint64_t kPruned = 6144;  // 25% of the image tokens removed

CostConfig config_for(CostVariant v) {
    CostConfig cfg;
    cfg.variant = v;
    return cfg;
}

const topi::FlopsComponent& component(const FlopsReport& report, const std::string& name) {
    for (const topi::FlopsComponent& c : report.components) {
        if (c.name == name) {
            return c;
        }
    }
    FAIL("missing component " << name);
    static topi::FlopsComponent none;
    return none;
}

}  // namespace

TEST_CASE("attention core cost is quadratic in the joint length") {
    CHECK(topi::attn_core_flops(kNImg, kNPrompt, kD) == 4 * 8704 * 8704 * kD);
    CHECK(topi::attn_core_flops(kPruned, kNPrompt, kD) == 4 * 6656 * 6656 * kD);
    CHECK(topi::attn_core_flops(1, 0, 1) == 4);
    CHECK(topi::attn_core_flops(0, 0, kD) == 0);
}

TEST_CASE("per-variant linear costs") {
    const topi::LinearFlops fd = topi::linear_flops(CostVariant::flux_double, kNImg, kNPrompt, kD);
    CHECK(fd.image == 24 * kNImg * kD2);
    CHECK(fd.text == 24 * kNPrompt * kD2);
    CHECK(fd.fused == 0);

    const topi::LinearFlops qd = topi::linear_flops(CostVariant::qwen_double, kNImg, kNPrompt, kD);
    CHECK(qd.image == 32 * kNImg * kD2);
    CHECK(qd.text == 32 * kNPrompt * kD2);

    const topi::LinearFlops fs = topi::linear_flops(CostVariant::flux_single, kNImg, kNPrompt, kD);
    CHECK(fs.fused == 24 * (kNImg + kNPrompt) * kD2);
    CHECK(fs.image == 0);
    CHECK(fs.text == 0);
}

TEST_CASE("flux double-stream layer table") {
    const FlopsReport r = topi::layer_breakdown(config_for(CostVariant::flux_double), kPruned);
    REQUIRE(r.components.size() == 3);

    const auto& attn = component(r, "attn_core");
    CHECK(attn.baseline == 4 * 8704 * 8704 * kD);
    CHECK(attn.pruned == 4 * 6656 * 6656 * kD);
    CHECK(topi::format_gflops(attn.baseline) == "1241.25");
    CHECK(topi::format_gflops(attn.pruned) == "725.85");
    CHECK(topi::format_reduction_pct(attn.baseline, attn.pruned) == "-41.5");

    const auto& img = component(r, "img_linear");
    CHECK(topi::format_gflops(img.baseline) == "3298.53");
    CHECK(topi::format_gflops(img.pruned) == "2473.90");
    CHECK(topi::format_reduction_pct(img.baseline, img.pruned) == "-25.0");

    const auto& txt = component(r, "txt_linear");
    CHECK(topi::format_gflops(txt.baseline) == "206.16");
    CHECK(txt.pruned == txt.baseline);
    CHECK(topi::format_reduction_pct(txt.baseline, txt.pruned) == "0.0");

    CHECK(r.total_baseline == attn.baseline + img.baseline + txt.baseline);
    CHECK(r.total_pruned == attn.pruned + img.pruned + txt.pruned);
    CHECK(r.total_baseline == 4745938862080ULL);
    CHECK(topi::format_gflops(r.total_baseline) == "4745.94");
    CHECK(topi::format_gflops(r.total_pruned) == "3405.91");
    CHECK(topi::format_reduction_pct(r.total_baseline, r.total_pruned) == "-28.2");
}

TEST_CASE("flux single-stream layer table") {
    const FlopsReport r = topi::layer_breakdown(config_for(CostVariant::flux_single), kPruned);
    REQUIRE(r.components.size() == 2);

    const auto& fused = component(r, "fused_linear");
    CHECK(topi::format_gflops(fused.baseline) == "3504.69");
    CHECK(topi::format_gflops(fused.pruned) == "2680.06");
    CHECK(topi::format_reduction_pct(fused.baseline, fused.pruned) == "-23.5");

    // the fused projections cost exactly as much as the split ones in total,
    // so the layer totals line up with the double-stream table
    const FlopsReport split = topi::layer_breakdown(config_for(CostVariant::flux_double), kPruned);
    CHECK(r.total_baseline == split.total_baseline);
    CHECK(r.total_pruned == split.total_pruned);
    CHECK(topi::format_reduction_pct(r.total_baseline, r.total_pruned) == "-28.2");
}

TEST_CASE("qwen double-stream layer table") {
    const FlopsReport r = topi::layer_breakdown(config_for(CostVariant::qwen_double), kPruned);
    REQUIRE(r.components.size() == 3);

    CHECK(topi::format_gflops(component(r, "img_linear").baseline) == "4398.05");
    CHECK(topi::format_gflops(component(r, "txt_linear").baseline) == "274.88");
    CHECK(topi::format_gflops(component(r, "attn_core").baseline) == "1241.25");
    CHECK(topi::format_gflops(component(r, "attn_core").pruned) == "725.85");

    CHECK(r.total_baseline == 5914169966592ULL);
    CHECK(topi::format_gflops(r.total_baseline) == "5914.17");
    CHECK(topi::format_gflops(r.total_pruned) == "4299.26");
    CHECK(topi::format_reduction_pct(r.total_baseline, r.total_pruned) == "-27.3");
}

TEST_CASE("no pruning means no reduction") {
    const FlopsReport r = topi::layer_breakdown(config_for(CostVariant::flux_double), kNImg);
    CHECK(r.total_pruned == r.total_baseline);
    for (const auto& c : r.components) {
        CHECK(c.pruned == c.baseline);
    }
    CHECK(topi::format_reduction_pct(r.total_baseline, r.total_pruned) == "0.0");
}

TEST_CASE("layer_breakdown rejects pruned counts above the baseline") {
    CHECK_THROWS_AS(topi::layer_breakdown(config_for(CostVariant::flux_double), kNImg + 1),
                    std::invalid_argument);
}

TEST_CASE("mask-update overhead is negligible against one layer") {
    const topi::OverheadFlops o = topi::overhead_flops(3, 24, 4096, 4096, 10);
    CHECK(o.scoring == 2ULL * 3 * 24 * 4096 * 4096);
    CHECK(o.selection == 4096ULL * 12);
    CHECK(o.amortized_per_step ==
          doctest::Approx(static_cast<double>(o.scoring + o.selection) / 10.0).epsilon(1e-15));

    const FlopsReport layer = topi::layer_breakdown(config_for(CostVariant::flux_double), kPruned);
    CHECK(o.amortized_per_step < 0.01 * static_cast<double>(layer.total_baseline));
}

TEST_CASE("overhead edge cases and validation") {
    const topi::OverheadFlops lone = topi::overhead_flops(1, 1, 1, 1, 1);
    CHECK(lone.scoring == 2);
    CHECK(lone.selection == 0);  // one candidate needs no sort

    const topi::OverheadFlops two = topi::overhead_flops(1, 1, 1, 2, 1);
    CHECK(two.selection == 2 * 1);  // ceil(log2 2) = 1
    const topi::OverheadFlops five = topi::overhead_flops(1, 1, 1, 5, 1);
    CHECK(five.selection == 5 * 3);  // ceil(log2 5) = 3

    const topi::OverheadFlops wide = topi::overhead_flops(3, 24, 4096, 4096, 20);
    const topi::OverheadFlops narrow = topi::overhead_flops(3, 24, 4096, 4096, 5);
    CHECK(wide.amortized_per_step < narrow.amortized_per_step);

    CHECK_THROWS_AS(topi::overhead_flops(0, 1, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(topi::overhead_flops(1, 0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(topi::overhead_flops(1, 1, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(topi::overhead_flops(1, 1, 1, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(topi::overhead_flops(1, 1, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("gflops formatting rounds half to even at two decimals") {
    CHECK(topi::format_gflops(0) == "0.00");
    CHECK(topi::format_gflops(10000000ULL) == "0.01");
    CHECK(topi::format_gflops(5000000ULL) == "0.00");    // 0.005 -> even 0.00
    CHECK(topi::format_gflops(15000000ULL) == "0.02");   // 0.015 -> even 0.02
    CHECK(topi::format_gflops(25000000ULL) == "0.02");   // 0.025 -> even 0.02
    CHECK(topi::format_gflops(35000000ULL) == "0.04");
    CHECK(topi::format_gflops(1000000000ULL) == "1.00");
    CHECK(topi::format_gflops(999999999999ULL) == "1000.00");
    CHECK(topi::format_gflops(123456789012ULL) == "123.46");
}

TEST_CASE("reduction formatting rounds half to even at one decimal") {
    CHECK(topi::format_reduction_pct(0, 0) == "0.0");
    CHECK(topi::format_reduction_pct(100, 100) == "0.0");
    CHECK(topi::format_reduction_pct(100, 120) == "0.0");   // regressions clamp
    CHECK(topi::format_reduction_pct(1000, 585) == "-41.5");
    CHECK(topi::format_reduction_pct(8, 7) == "-12.5");
    CHECK(topi::format_reduction_pct(16, 15) == "-6.2");    // 6.25 -> even 6.2
    CHECK(topi::format_reduction_pct(16, 13) == "-18.8");   // 18.75 -> even 18.8
    CHECK(topi::format_reduction_pct(1000000, 999999) == "0.0");  // below display precision
    CHECK(topi::format_reduction_pct(10000, 9990) == "-0.1");
}

TEST_CASE("variant names round-trip") {
    for (CostVariant v :
         {CostVariant::flux_double, CostVariant::flux_single, CostVariant::qwen_double}) {
        CHECK(topi::cost_variant_from_name(topi::cost_variant_name(v)) == v);
    }
    CHECK_THROWS_AS(topi::cost_variant_from_name("sd3"), std::invalid_argument);
}
