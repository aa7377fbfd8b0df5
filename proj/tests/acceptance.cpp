// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance gate. Each check prints one PASS/FAIL line with the
// measured values; the process exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "topi/calibration.hpp"
#include "topi/engine.hpp"
#include "topi/flops.hpp"
#include "topi/influence.hpp"
#include "topi/metrics.hpp"
#include "topi/model.hpp"
#include "topi/pruning.hpp"
#include "topi/rng.hpp"
#include "topi/tensor.hpp"

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

// Canvas whose rows share one base vector plus small jitter. Near-identical
// rows issue near-identical queries, so the attention pattern over the
// reference is a property of the canvas as a whole and the per-token scores
// rank reference rows by how much the canvas actually draws on them. A
// random keep ignores that ranking and pays for it.
topi::Matrix coherent_canvas(std::size_t rows, std::size_t cols, std::uint64_t seed,
                             double jitter) {
    topi::Xoshiro256pp rng(seed);
    std::vector<double> base(cols);
    for (double& v : base) {
        v = rng.next_gaussian(1.0);
    }
    topi::Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m.at(r, c) = base[c] + jitter * rng.next_gaussian(1.0);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// 1. Analytic cost tables reproduce the published per-layer numbers.

Outcome check_flops_table() {
    struct Cell {
        const char* name;
        const char* base;
        const char* pruned;
        const char* reduction;
    };
    struct Table {
        topi::CostVariant variant;
        std::vector<Cell> cells;  // components first, then the layer total
    };
    const std::vector<Table> golden = {
        {topi::CostVariant::flux_double,
         {{"attn_core", "1241.25", "725.85", "-41.5"},
          {"img_linear", "3298.53", "2473.90", "-25.0"},
          {"txt_linear", "206.16", "206.16", "0.0"},
          {"layer_total", "4745.94", "3405.91", "-28.2"}}},
        {topi::CostVariant::flux_single,
         {{"attn_core", "1241.25", "725.85", "-41.5"},
          {"fused_linear", "3504.69", "2680.06", "-23.5"},
          {"layer_total", "4745.94", "3405.91", "-28.2"}}},
        {topi::CostVariant::qwen_double,
         {{"attn_core", "1241.25", "725.85", "-41.5"},
          {"img_linear", "4398.05", "3298.53", "-25.0"},
          {"txt_linear", "274.88", "274.88", "0.0"},
          {"layer_total", "5914.17", "4299.26", "-27.3"}}},
    };

    std::size_t checked = 0;
    for (const Table& table : golden) {
        topi::CostConfig cost;
        cost.variant = table.variant;
        const topi::FlopsReport report = topi::layer_breakdown(cost, 6144);
        for (const Cell& cell : table.cells) {
            std::uint64_t base = 0;
            std::uint64_t pruned = 0;
            if (std::string(cell.name) == "layer_total") {
                base = report.total_baseline;
                pruned = report.total_pruned;
            } else {
                const auto it = std::find_if(
                    report.components.begin(), report.components.end(),
                    [&](const topi::FlopsComponent& c) { return c.name == cell.name; });
                if (it == report.components.end()) {
                    return {false, fmt("component %s missing from %s breakdown", cell.name,
                                       topi::cost_variant_name(table.variant))};
                }
                base = it->baseline;
                pruned = it->pruned;
            }
            const std::string got_base = topi::format_gflops(base);
            const std::string got_pruned = topi::format_gflops(pruned);
            const std::string got_red = topi::format_reduction_pct(base, pruned);
            if (got_base != cell.base || got_pruned != cell.pruned ||
                got_red != cell.reduction) {
                return {false,
                        fmt("%s/%s: got %s -> %s (%s%%), want %s -> %s (%s%%)",
                            topi::cost_variant_name(table.variant), cell.name,
                            got_base.c_str(), got_pruned.c_str(), got_red.c_str(), cell.base,
                            cell.pruned, cell.reduction)};
            }
            checked += 3;
        }
    }
    return {true, fmt("%zu table cells match across three variants", checked)};
}

// ---------------------------------------------------------------------------
// 2. A full retention budget reproduces the unpruned trajectory.

Outcome check_lossless_budget() {
    const topi::ModelConfig cfg;  // stock 12-layer model, 40 steps
    const topi::ToyDiT model = topi::build_model(cfg);
    const topi::Matrix noise =
        topi::seeded_fill(cfg.n_noisy, cfg.d_model(), 1, topi::FillDist::gaussian(1.0));
    const topi::Matrix reference =
        topi::seeded_fill(cfg.n_ref, cfg.d_model(), 2, topi::FillDist::gaussian(1.0));

    const topi::TrajectoryRecord full = topi::run_baseline(model, noise, reference);

    topi::PrunerPolicy policy;
    policy.tau = 1.0;
    policy.schedule = topi::make_schedule(static_cast<int>(cfg.steps), 10);
    policy.layers.layers = {3, 6, 9};
    const topi::TrajectoryRecord kept_all = topi::run_trajectory(model, noise, reference, policy);

    double max_abs = 0.0;
    for (std::size_t i = 0; i < full.final_latent.data.size(); ++i) {
        max_abs = std::max(max_abs,
                           std::fabs(full.final_latent.data[i] - kept_all.final_latent.data[i]));
    }
    const topi::QualityReport q =
        topi::compare_latents(full.final_latent, kept_all.final_latent);
    const bool pass = max_abs <= 1e-9 && q.psnr == 99.0;
    return {pass, fmt("max|err| %.3g (limit 1e-9), psnr %.1f dB (want capped 99.0)", max_abs,
                      q.psnr)};
}

// ---------------------------------------------------------------------------
// 3. Greedy prefix selection matches exhaustive subset search.

Outcome check_selection_optimal() {
    topi::Xoshiro256pp rng(77);
    const double taus[] = {0.3, 0.5, 0.85, 0.99};
    std::size_t trials = 0;
    std::size_t matches = 0;

    for (int v = 0; v < 200; ++v) {
        const std::size_t n = 1 + rng.next_u64() % 12;
        topi::InfluenceScores scores;
        // Integer-valued doubles keep every subset sum exact, so the
        // exhaustive oracle is unambiguous.
        for (std::size_t i = 0; i < n; ++i) {
            scores.values.push_back(static_cast<double>(1 + rng.next_u64() % 1000));
        }
        double total = 0.0;
        for (double s : scores.values) {
            total += s;
        }
        for (const double tau : taus) {
            ++trials;
            const std::size_t k_greedy = topi::select_subset(scores, tau).k_sel;

            std::vector<double> best(n + 1, 0.0);  // best subset sum per size
            for (std::size_t mask = 1; mask < (1u << n); ++mask) {
                double sum = 0.0;
                std::size_t bits = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (mask & (1u << i)) {
                        sum += scores.values[i];
                        ++bits;
                    }
                }
                best[bits] = std::max(best[bits], sum);
            }
            std::size_t k_oracle = n;
            for (std::size_t k = 1; k <= n; ++k) {
                if (best[k] >= tau * total) {
                    k_oracle = k;
                    break;
                }
            }
            if (k_greedy == k_oracle) {
                ++matches;
            }
        }
    }
    return {matches == trials, fmt("%zu/%zu selections equal the exhaustive minimum", matches,
                                   trials)};
}

// ---------------------------------------------------------------------------
// 4. Influence accumulation agrees with a direct quadruple loop.

Outcome check_influence_oracle() {
    topi::Xoshiro256pp rng(99);
    const std::size_t heads = 2;
    const std::size_t n_noisy = 16;
    const std::size_t n_ref = 16;
    double worst = 0.0;

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<topi::AttentionCapture> captures(2);
        for (int layer = 0; layer < 2; ++layer) {
            topi::AttentionCapture& c = captures[layer];
            c.layer = layer;
            c.heads = heads;
            c.n_noisy = n_noisy;
            c.n_ref = n_ref;
            c.attn.resize(heads * n_noisy * n_ref);
            c.value_norms.resize(heads * n_ref);
            for (double& a : c.attn) {
                a = rng.next_double();
            }
            for (double& vn : c.value_norms) {
                vn = 2.0 * rng.next_double();
            }
        }

        const topi::InfluenceScores scores = topi::influence_scores(captures, {0, 1}, 7);

        for (std::size_t j = 0; j < n_ref; ++j) {
            double direct = 0.0;
            for (const topi::AttentionCapture& c : captures) {
                for (std::size_t h = 0; h < heads; ++h) {
                    for (std::size_t i = 0; i < n_noisy; ++i) {
                        direct += c.vnorm(h, j) * c.a(h, i, j);
                    }
                }
            }
            worst = std::max(worst, std::fabs(direct - scores.values[j]));
        }
    }
    return {worst <= 1e-10, fmt("max |delta| %.2e over 50 capture sets (limit 1e-10)", worst)};
}

// ---------------------------------------------------------------------------
// 5. The anchor schedule alone triggers score recomputation.

Outcome check_anchor_cadence() {
    const topi::ModelConfig cfg;  // 40 steps
    const topi::ToyDiT model = topi::build_model(cfg);
    const topi::Matrix noise =
        topi::seeded_fill(cfg.n_noisy, cfg.d_model(), 1, topi::FillDist::gaussian(1.0));
    const topi::Matrix reference =
        topi::seeded_fill(cfg.n_ref, cfg.d_model(), 2, topi::FillDist::gaussian(1.0));

    topi::PrunerPolicy policy;
    policy.schedule = topi::make_schedule(static_cast<int>(cfg.steps), 10);
    policy.layers.layers = {3, 6, 9};
    const topi::TrajectoryRecord record = topi::run_trajectory(model, noise, reference, policy);

    std::vector<int> anchor_steps;
    std::size_t off_anchor_modes = 0;
    for (const topi::StepRecord& step : record.steps) {
        if (step.mode == 'A') {
            anchor_steps.push_back(step.timestep);
        } else if (step.mode != 'B') {
            ++off_anchor_modes;
        }
    }
    const std::vector<int> want = {40, 30, 20, 10};
    const bool pass = anchor_steps == want && off_anchor_modes == 0 &&
                      record.counters.score_recomputations == 4 &&
                      record.score_events.size() == 4;
    return {pass, fmt("anchor steps %zu at t={40,30,20,10}: %s; score recomputations %llu "
                      "(want 4)",
                      anchor_steps.size(), anchor_steps == want ? "yes" : "no",
                      static_cast<unsigned long long>(record.counters.score_recomputations))};
}

// ---------------------------------------------------------------------------
// 6. Retention grows with the budget and always covers it.

Outcome check_budget_monotonicity() {
    const topi::ModelConfig cfg;
    const topi::ToyDiT model = topi::build_model(cfg);
    const topi::Matrix noise =
        topi::seeded_fill(cfg.n_noisy, cfg.d_model(), 1, topi::FillDist::gaussian(1.0));
    const topi::Matrix reference =
        topi::seeded_fill(cfg.n_ref, cfg.d_model(), 2, topi::FillDist::gaussian(1.0));

    const topi::SequenceState state =
        topi::make_state(model, noise, reference, static_cast<int>(cfg.steps));
    const topi::DenoiseOutput out = topi::denoise_step(model, state, {3, 6, 9});
    const topi::InfluenceScores scores =
        topi::influence_scores(out.captures, {3, 6, 9}, static_cast<int>(cfg.steps));

    // Mass accounting mirrors the selector: descending order for both the
    // grand total and the kept prefix, so the comparison is reproducible.
    std::vector<double> sorted = scores.values;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double total = 0.0;
    for (double s : sorted) {
        total += s;
    }

    const double taus[] = {0.60, 0.70, 0.80, 0.85, 0.90, 0.95, 1.00};
    std::size_t prev = 0;
    std::string ks;
    for (const double tau : taus) {
        const topi::RetentionMask mask = topi::select_subset(scores, tau);
        if (mask.k_sel < prev) {
            return {false, fmt("k_sel shrank from %zu to %zu at tau %.2f", prev, mask.k_sel,
                               tau)};
        }
        prev = mask.k_sel;
        ks += (ks.empty() ? "" : ",") + std::to_string(mask.k_sel);

        double kept_mass = 0.0;
        for (std::size_t k = 0; k < mask.k_sel; ++k) {
            kept_mass += sorted[k];
        }
        if (kept_mass < tau * total) {
            return {false, fmt("kept mass %.17g misses budget %.17g at tau %.2f", kept_mass,
                               tau * total, tau)};
        }
    }
    const bool full_at_one = prev == scores.values.size();
    return {full_at_one, fmt("k_sel over the grid: %s; every budget covered; tau=1 keeps all "
                             "%zu tokens",
                             ks.c_str(), scores.values.size())};
}

// ---------------------------------------------------------------------------
// 7. Influence-guided retention beats both a leaner budget and a random keep.

Outcome check_influence_quality() {
    // One attention layer, one head, scored and pruned at layer 0: the layer
    // whose scores drive the selection is exactly the layer the selection
    // perturbs. Two mask periods over 32 steps keep the comparison about
    // selection quality rather than averaging across reshuffles.
    topi::ModelConfig cfg;
    cfg.depth_double = 1;
    cfg.depth_single = 0;
    cfg.heads = 1;
    cfg.head_dim = 16;
    cfg.n_noisy = 64;
    cfg.n_ref = 64;
    cfg.n_prompt = 2;
    cfg.steps = 32;
    cfg.seed = 31;
    const topi::ToyDiT model = topi::build_model(cfg);

    topi::PrunerPolicy base;
    base.schedule = topi::make_schedule(static_cast<int>(cfg.steps), 16);
    base.layers.layers = {0};
    base.k_exempt = 0;

    int budget_wins = 0;
    int metric_wins = 0;
    double worst_budget = 1e300;
    double worst_metric = 1e300;
    const int trials = 10;
    for (int s = 0; s < trials; ++s) {
        const topi::Matrix noise = coherent_canvas(
            cfg.n_noisy, cfg.d_model(), 100 + static_cast<std::uint64_t>(s), 0.05);
        const topi::Matrix reference = topi::seeded_fill(
            cfg.n_ref, cfg.d_model(), 200 + static_cast<std::uint64_t>(s),
            topi::FillDist::gaussian(1.0));

        const topi::Matrix full =
            topi::run_baseline(model, noise, reference).final_latent;

        topi::PrunerPolicy rich = base;
        rich.tau = 0.85;
        const double psnr_rich = topi::compare_latents(
            full, topi::run_trajectory(model, noise, reference, rich).final_latent).psnr;

        topi::PrunerPolicy lean = base;
        lean.tau = 0.5;
        const double psnr_lean = topi::compare_latents(
            full, topi::run_trajectory(model, noise, reference, lean).final_latent).psnr;

        topi::PrunerPolicy random = rich;
        random.metric = topi::ScoreMetric::random_drop;
        random.baseline_seed = 900 + static_cast<std::uint64_t>(s);
        const double psnr_random = topi::compare_latents(
            full, topi::run_trajectory(model, noise, reference, random).final_latent).psnr;

        if (psnr_rich > psnr_lean) {
            ++budget_wins;
        }
        if (psnr_rich > psnr_random) {
            ++metric_wins;
        }
        worst_budget = std::min(worst_budget, psnr_rich - psnr_lean);
        worst_metric = std::min(worst_metric, psnr_rich - psnr_random);
    }
    const bool pass = budget_wins >= 9 && metric_wins >= 9;
    return {pass, fmt("tau 0.85 beats tau 0.5 in %d/%d seeds (worst %+.2f dB); influence beats "
                      "matched random keep in %d/%d (worst %+.2f dB; want >= 9)",
                      budget_wins, trials, worst_budget, metric_wins, trials, worst_metric)};
}

// ---------------------------------------------------------------------------
// 8. Score bookkeeping stays far below one layer's compute.

Outcome check_overhead() {
    const topi::CostConfig cost;  // flux_double layer at the stock shape
    const topi::FlopsReport report = topi::layer_breakdown(cost, 6144);
    const topi::OverheadFlops overhead = topi::overhead_flops(3, 24, 4096, 4096, 10);
    const double pct = 100.0 * overhead.amortized_per_step /
                       static_cast<double>(report.total_baseline);
    return {pct < 1.0, fmt("amortized %.1f flops/step = %.4f%% of a %s layer (limit 1%%)",
                           overhead.amortized_per_step, pct,
                           topi::cost_variant_name(cost.variant))};
}

// ---------------------------------------------------------------------------
// 9. Observation never perturbs the forward pass.

Outcome check_capture_noninterference() {
    topi::Xoshiro256pp rng(13);
    int identical = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        topi::ModelConfig cfg;
        cfg.depth_double = 1 + rng.next_u64() % 2;
        cfg.depth_single = 1 + rng.next_u64() % 2;
        cfg.heads = 1 + rng.next_u64() % 2;
        cfg.head_dim = 4 * (1 + rng.next_u64() % 2);
        cfg.n_noisy = 4 + rng.next_u64() % 5;
        cfg.n_ref = 4 + rng.next_u64() % 5;
        cfg.n_prompt = 1 + rng.next_u64() % 4;
        cfg.steps = 2 + rng.next_u64() % 3;
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        const topi::ToyDiT model = topi::build_model(cfg);

        const topi::Matrix noise = topi::seeded_fill(cfg.n_noisy, cfg.d_model(),
                                                     3000 + static_cast<std::uint64_t>(trial),
                                                     topi::FillDist::gaussian(1.0));
        const topi::Matrix reference = topi::seeded_fill(
            cfg.n_ref, cfg.d_model(), 4000 + static_cast<std::uint64_t>(trial),
            topi::FillDist::gaussian(1.0));

        std::vector<int> observe;
        for (std::size_t layer = 0; layer < cfg.total_layers(); ++layer) {
            if (rng.next_u64() % 2 == 0) {
                observe.push_back(static_cast<int>(layer));
            }
        }
        if (observe.empty()) {
            observe.push_back(0);
        }

        const topi::TrajectoryRecord with_captures =
            topi::run_baseline(model, noise, reference, observe);
        const topi::TrajectoryRecord without =
            topi::run_baseline(model, noise, reference);
        if (with_captures.final_latent.data == without.final_latent.data) {
            ++identical;
        }
    }
    return {identical == trials,
            fmt("%d/%d random configs bitwise identical with and without captures", identical,
                trials)};
}

}  // namespace

int main() {
    struct Check {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Check> checks = {
        {"analytic cost tables", check_flops_table},
        {"lossless budget reproduces baseline", check_lossless_budget},
        {"greedy selection is exhaustively optimal", check_selection_optimal},
        {"influence matches the direct accumulation", check_influence_oracle},
        {"anchor cadence drives recomputation", check_anchor_cadence},
        {"retention grows with the budget", check_budget_monotonicity},
        {"influence-guided retention wins", check_influence_quality},
        {"scoring overhead is amortized away", check_overhead},
        {"captures never perturb the forward pass", check_capture_noninterference},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            outcome = checks[i].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %zu. %s: %s (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    checks[i].name, outcome.detail.c_str(), secs);
        if (!outcome.pass) {
            ++failures;
        }
    }
    if (failures == 0) {
        std::printf("acceptance: all %zu checks passed\n", checks.size());
        return 0;
    }
    std::printf("acceptance: %d of %zu checks FAILED\n", failures, checks.size());
    return 1;
}
