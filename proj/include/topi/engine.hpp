// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "topi/model.hpp"
#include "topi/pruning.hpp"

namespace topi {

// Mutable per-step sequence state. h_ref holds the ACTIVE reference block
// (full before the exempt boundary, gathered after it on accelerated steps);
// p_ref always matches it row for row.
struct SequenceState {
    Matrix h_noisy;
    Matrix h_ref;
    Matrix h_prompt;
    std::vector<GridPos> p_noisy;
    std::vector<GridPos> p_ref;
    int timestep = 0;
};

// Instrumentation: capture/gather/scoring side effects are counted, never
// inferred, so the cost-shape assertions cannot silently rot.
struct EngineCounters {
    std::size_t captures_materialized = 0;
    std::size_t gather_ops = 0;
    std::size_t gather_rows = 0;
    std::size_t score_recomputations = 0;
};

struct DenoiseOutput {
    Matrix eps_hat;
    std::vector<AttentionCapture> captures;
};

// Fresh per-step state: noisy block from the current latent, full reference
// block, prompt embeddings from the model. Grid positions place the
// reference canvas to the right of the generation canvas.
SequenceState make_state(const ToyDiT& model, const Matrix& latent, const Matrix& reference,
                         int timestep);

// One transformer block (global layer index: double-stream layers first).
// Returns the transformed state; fills `capture` when requested.
SequenceState forward_block(const ToyDiT& model, const SequenceState& state, int layer,
                            bool capture, AttentionCapture* capture_out,
                            EngineCounters* counters);

// All layers in order plus the output projection. capture_layers lists the
// global layer indices whose noisy->reference attention should be recorded;
// captures are returned in ascending layer order. Observation only: the
// returned eps_hat is bitwise independent of capture_layers.
DenoiseOutput denoise_step(const ToyDiT& model, const SequenceState& state,
                           const std::vector<int>& capture_layers,
                           EngineCounters* counters = nullptr);

// Rectified-flow Euler update, in place: latent -= eps_hat / steps.
void apply_update(Matrix& latent, const Matrix& eps_hat, std::size_t steps);

// Per-(step, layer) observation summary: the target-aware score vector over
// the active reference block and its total.
struct StepCaptureSummary {
    int layer = -1;
    std::vector<double> s_j;
    double total = 0.0;
};

struct StepRecord {
    int timestep = 0;
    char mode = 'F';  // 'F' full baseline, 'A' anchor, 'B' accelerated
    std::size_t retained = 0;
    std::vector<StepCaptureSummary> captures;
};

struct MaskEvent {
    int timestep = 0;
    std::vector<std::size_t> kept;
};

struct ScoreEvent {
    int timestep = 0;
    ScoreMetric metric = ScoreMetric::influence;
    std::vector<double> values;
};

struct TrajectoryRecord {
    std::vector<StepRecord> steps;
    std::vector<MaskEvent> mask_history;
    std::vector<ScoreEvent> score_events;
    Matrix final_latent;
    EngineCounters counters;
};

// Plain full-context denoising loop; observe_layers are captured (and
// summarized into the record) at every step.
TrajectoryRecord run_baseline(const ToyDiT& model, const Matrix& init_noise,
                              const Matrix& reference, const std::vector<int>& observe_layers = {});

// Policy-driven loop. Anchor steps run the full reference through every
// layer, refresh the retention mask from captures at the policy's layers,
// and already yield that step's prediction; other steps run the front-end
// on the full reference, reduce it once at the exempt boundary, and run the
// back-end on the reduced block.
TrajectoryRecord run_trajectory(const ToyDiT& model, const Matrix& init_noise,
                                const Matrix& reference, const PrunerPolicy& policy,
                                const std::vector<int>& observe_layers = {});

}  // namespace topi
