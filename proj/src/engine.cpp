// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "topi/analysis.hpp"
#include "topi/errors.hpp"

namespace topi {

namespace {

void add_inplace(Matrix& dst, const Matrix& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) {
        dst.data[i] += src.data[i];
    }
}

std::vector<GridPos> concat_positions(const std::vector<GridPos>& a,
                                      const std::vector<GridPos>& b) {
    std::vector<GridPos> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// RoPE applies to image-grid rows only; prompt rows pass through unrotated.
Matrix rope_image_rows(const Matrix& m, const std::vector<GridPos>& img_positions,
                       std::size_t n_img, std::size_t heads) {
    if (n_img == 0) {
        return m;
    }
    const Matrix rotated = apply_rope(take_rows(m, 0, n_img), img_positions, heads);
    return vstack(rotated, take_rows(m, n_img, m.rows));
}

// Joint multi-head attention over the full row set. When `capture` is set,
// the noisy->reference slice, per-head reference value norms, and the layer
// input reference rows are recorded; full attention rows are checked to
// normalize to 1 first.
Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t heads,
                 std::size_t n_noisy, std::size_t n_ref, int layer, bool capture,
                 AttentionCapture* capture_out, const Matrix& ref_hidden_in,
                 EngineCounters* counters) {
    const std::size_t n = q.rows;
    const std::size_t head_dim = q.cols / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    if (capture && capture_out != nullptr) {
        capture_out->layer = layer;
        capture_out->n_noisy = n_noisy;
        capture_out->n_ref = n_ref;
        capture_out->heads = heads;
        capture_out->attn.assign(heads * n_noisy * n_ref, 0.0);
        capture_out->value_norms.assign(heads * n_ref, 0.0);
        capture_out->ref_hidden = ref_hidden_in;
        if (counters != nullptr) {
            ++counters->captures_materialized;
        }
    }

    Matrix out(n, q.cols);
    for (std::size_t h = 0; h < heads; ++h) {
        const Matrix qh = take_cols(q, h * head_dim, (h + 1) * head_dim);
        const Matrix kh = take_cols(k, h * head_dim, (h + 1) * head_dim);
        const Matrix vh = take_cols(v, h * head_dim, (h + 1) * head_dim);
        const Matrix attn = row_softmax(matmul_nt(qh, kh), scale);

        if (capture && capture_out != nullptr) {
            for (std::size_t i = 0; i < n_noisy; ++i) {
                double row_sum = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    row_sum += attn.at(i, c);
                }
                if (std::abs(row_sum - 1.0) > 1e-9) {
                    throw std::runtime_error("attention row does not normalize at layer " +
                                             std::to_string(layer));
                }
                for (std::size_t j = 0; j < n_ref; ++j) {
                    capture_out->a(h, i, j) = attn.at(i, n_noisy + j);
                }
            }
            for (std::size_t j = 0; j < n_ref; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < head_dim; ++c) {
                    acc += vh.at(n_noisy + j, c) * vh.at(n_noisy + j, c);
                }
                capture_out->value_norms[h * n_ref + j] = std::sqrt(acc);
            }
        }

        put_cols(out, h * head_dim, matmul(attn, vh));
    }
    return out;
}

SequenceState forward_double(const ToyDiT& model, const SequenceState& state,
                             const DoubleLayerWeights& w, int layer, bool capture,
                             AttentionCapture* capture_out, EngineCounters* counters) {
    const std::size_t heads = model.config.heads;
    Matrix h_img = vstack(state.h_noisy, state.h_ref);
    const std::size_t n_img = h_img.rows;

    const Matrix a_img = rms_norm(h_img);
    const Matrix a_txt = rms_norm(state.h_prompt);

    Matrix q = vstack(matmul(a_img, w.img_wq), matmul(a_txt, w.txt_wq));
    Matrix k = vstack(matmul(a_img, w.img_wk), matmul(a_txt, w.txt_wk));
    const Matrix v = vstack(matmul(a_img, w.img_wv), matmul(a_txt, w.txt_wv));

    const std::vector<GridPos> img_pos = concat_positions(state.p_noisy, state.p_ref);
    q = rope_image_rows(q, img_pos, n_img, heads);
    k = rope_image_rows(k, img_pos, n_img, heads);

    const Matrix attn_out =
        attention(q, k, v, heads, state.h_noisy.rows, state.h_ref.rows, layer, capture,
                  capture_out, state.h_ref, counters);

    add_inplace(h_img, matmul(take_rows(attn_out, 0, n_img), w.img_wo));
    Matrix h_txt = state.h_prompt;
    add_inplace(h_txt, matmul(take_rows(attn_out, n_img, attn_out.rows), w.txt_wo));

    add_inplace(h_img, matmul(gelu(matmul(rms_norm(h_img), w.img_w1)), w.img_w2));
    add_inplace(h_txt, matmul(gelu(matmul(rms_norm(h_txt), w.txt_w1)), w.txt_w2));

    SequenceState out = state;
    out.h_noisy = take_rows(h_img, 0, state.h_noisy.rows);
    out.h_ref = take_rows(h_img, state.h_noisy.rows, n_img);
    out.h_prompt = std::move(h_txt);
    return out;
}

SequenceState forward_single(const ToyDiT& model, const SequenceState& state,
                             const SingleLayerWeights& w, int layer, bool capture,
                             AttentionCapture* capture_out, EngineCounters* counters) {
    const std::size_t heads = model.config.heads;
    const std::size_t n_img = state.h_noisy.rows + state.h_ref.rows;

    Matrix x = vstack(vstack(state.h_noisy, state.h_ref), state.h_prompt);
    const Matrix a = rms_norm(x);

    Matrix q = matmul(a, w.wq);
    Matrix k = matmul(a, w.wk);
    const Matrix v = matmul(a, w.wv);

    const std::vector<GridPos> img_pos = concat_positions(state.p_noisy, state.p_ref);
    q = rope_image_rows(q, img_pos, n_img, heads);
    k = rope_image_rows(k, img_pos, n_img, heads);

    const Matrix attn_out =
        attention(q, k, v, heads, state.h_noisy.rows, state.h_ref.rows, layer, capture,
                  capture_out, state.h_ref, counters);
    const Matrix mlp = gelu(matmul(a, w.w_up));
    add_inplace(x, matmul(hstack(attn_out, mlp), w.w_fused));

    SequenceState out = state;
    out.h_noisy = take_rows(x, 0, state.h_noisy.rows);
    out.h_ref = take_rows(x, state.h_noisy.rows, n_img);
    out.h_prompt = take_rows(x, n_img, x.rows);
    return out;
}

StepCaptureSummary summarize(const AttentionCapture& capture) {
    StepCaptureSummary summary;
    summary.layer = capture.layer;
    summary.s_j = target_aware_score(capture);
    summary.total = 0.0;
    for (double v : summary.s_j) {
        summary.total += v;
    }
    return summary;
}

// Runs all layers with an optional one-shot reference reduction immediately
// before `reduce_at`. reduce_at < 0 disables reduction.
DenoiseOutput run_layers(const ToyDiT& model, SequenceState state,
                         const std::vector<int>& capture_layers, int reduce_at,
                         const RetentionMask* mask, ReductionKind reduction,
                         EngineCounters* counters) {
    const int total = static_cast<int>(model.config.total_layers());
    DenoiseOutput out;
    for (int layer = 0; layer < total; ++layer) {
        if (layer == reduce_at && mask != nullptr) {
            auto reduced = reduction == ReductionKind::prune
                               ? realign_context(state.h_ref, state.p_ref, *mask)
                               : merge_context(state.h_ref, state.p_ref, *mask);
            state.h_ref = std::move(reduced.first);
            state.p_ref = std::move(reduced.second);
            if (counters != nullptr) {
                ++counters->gather_ops;
                counters->gather_rows += mask->k_sel;
            }
        }
        const bool cap = std::find(capture_layers.begin(), capture_layers.end(), layer) !=
                         capture_layers.end();
        AttentionCapture capture;
        state = forward_block(model, state, layer, cap, cap ? &capture : nullptr, counters);
        if (cap) {
            out.captures.push_back(std::move(capture));
        }
    }
    out.eps_hat = matmul(rms_norm(state.h_noisy), model.w_out);
    return out;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out = a;
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<StepCaptureSummary> summarize_observed(const std::vector<AttentionCapture>& captures,
                                                   const std::vector<int>& observe_layers) {
    std::vector<StepCaptureSummary> out;
    for (const auto& c : captures) {
        if (std::find(observe_layers.begin(), observe_layers.end(), c.layer) !=
            observe_layers.end()) {
            out.push_back(summarize(c));
        }
    }
    return out;
}

InfluenceScores compute_scores(ScoreMetric metric, const std::vector<AttentionCapture>& captures,
                               const std::vector<int>& layers, int timestep) {
    std::vector<AttentionCapture> scoring;
    scoring.reserve(layers.size());
    for (const auto& c : captures) {
        if (std::find(layers.begin(), layers.end(), c.layer) != layers.end()) {
            scoring.push_back(c);
        }
    }
    if (metric == ScoreMetric::attn_only || metric == ScoreMetric::similarity) {
        return baseline_scores(metric, scoring, layers, timestep);
    }
    // influence proper, and the size-matching basis for random_drop
    return influence_scores(scoring, layers, timestep);
}

}  // namespace

SequenceState make_state(const ToyDiT& model, const Matrix& latent, const Matrix& reference,
                         int timestep) {
    const ModelConfig& cfg = model.config;
    if (latent.rows != cfg.n_noisy || latent.cols != cfg.d_model()) {
        throw std::invalid_argument("make_state: latent shape does not match the model");
    }
    if (reference.rows != cfg.n_ref || reference.cols != cfg.d_model()) {
        throw std::invalid_argument("make_state: reference shape does not match the model");
    }
    SequenceState state;
    state.h_noisy = latent;
    state.h_ref = reference;
    state.h_prompt = model.prompt_embed;
    const std::size_t w_gen = grid_width(cfg.n_noisy);
    const std::size_t w_ref = grid_width(cfg.n_ref);
    state.p_noisy = make_grid_positions(cfg.n_noisy, w_gen, 0);
    // Reference canvas sits to the right of the generation canvas.
    state.p_ref = make_grid_positions(cfg.n_ref, w_ref, static_cast<int>(w_gen));
    state.timestep = timestep;
    return state;
}

SequenceState forward_block(const ToyDiT& model, const SequenceState& state, int layer,
                            bool capture, AttentionCapture* capture_out,
                            EngineCounters* counters) {
    const int depth_double = static_cast<int>(model.config.depth_double);
    const int total = static_cast<int>(model.config.total_layers());
    if (layer < 0 || layer >= total) {
        throw std::invalid_argument("forward_block: layer index out of range");
    }
    if (layer < depth_double) {
        return forward_double(model, state, model.double_layers[static_cast<std::size_t>(layer)],
                              layer, capture, capture_out, counters);
    }
    return forward_single(model, state,
                          model.single_layers[static_cast<std::size_t>(layer - depth_double)],
                          layer, capture, capture_out, counters);
}

DenoiseOutput denoise_step(const ToyDiT& model, const SequenceState& state,
                           const std::vector<int>& capture_layers, EngineCounters* counters) {
    return run_layers(model, state, capture_layers, /*reduce_at=*/-1, nullptr,
                      ReductionKind::prune, counters);
}

void apply_update(Matrix& latent, const Matrix& eps_hat, std::size_t steps) {
    const double inv = 1.0 / static_cast<double>(steps);
    for (std::size_t i = 0; i < latent.data.size(); ++i) {
        latent.data[i] -= inv * eps_hat.data[i];
    }
}

TrajectoryRecord run_baseline(const ToyDiT& model, const Matrix& init_noise,
                              const Matrix& reference, const std::vector<int>& observe_layers) {
    TrajectoryRecord rec;
    Matrix g = init_noise;
    for (int t = static_cast<int>(model.config.steps); t >= 1; --t) {
        const SequenceState state = make_state(model, g, reference, t);
        DenoiseOutput out = denoise_step(model, state, observe_layers, &rec.counters);
        StepRecord step;
        step.timestep = t;
        step.mode = 'F';
        step.retained = reference.rows;
        step.captures = summarize_observed(out.captures, observe_layers);
        rec.steps.push_back(std::move(step));
        apply_update(g, out.eps_hat, model.config.steps);
    }
    rec.final_latent = std::move(g);
    return rec;
}

TrajectoryRecord run_trajectory(const ToyDiT& model, const Matrix& init_noise,
                                const Matrix& reference, const PrunerPolicy& policy,
                                const std::vector<int>& observe_layers) {
    policy.validate(model.config.total_layers());

    TrajectoryRecord rec;
    Matrix g = init_noise;
    MaskController controller(policy, reference.rows);
    const std::vector<int> anchor_caps = sorted_union(policy.layers.layers, observe_layers);

    for (int t = static_cast<int>(model.config.steps); t >= 1; --t) {
        const SequenceState state = make_state(model, g, reference, t);
        StepRecord step;
        step.timestep = t;

        if (controller.is_anchor(t)) {
            // Mode A: full reference through every layer; captures feed the
            // mask for the following accelerated steps.
            DenoiseOutput out = denoise_step(model, state, anchor_caps, &rec.counters);
            InfluenceScores scores =
                compute_scores(policy.metric, out.captures, policy.layers.layers, t);
            ++rec.counters.score_recomputations;
            const RetentionMask& mask =
                controller.advance(t, [&scores]() { return scores; });
            rec.score_events.push_back({t, policy.metric, scores.values});
            rec.mask_history.push_back({t, mask.kept_indices()});

            step.mode = 'A';
            step.retained = reference.rows;
            step.captures = summarize_observed(out.captures, observe_layers);
            apply_update(g, out.eps_hat, model.config.steps);
        } else {
            // Mode B: full reference into the exempt front-end, reduced
            // reference from the boundary on.
            const RetentionMask& mask = controller.current();
            DenoiseOutput out =
                run_layers(model, state, observe_layers, static_cast<int>(policy.k_exempt),
                           &mask, policy.reduction, &rec.counters);
            step.mode = 'B';
            step.retained = mask.k_sel;
            step.captures = summarize_observed(out.captures, observe_layers);
            apply_update(g, out.eps_hat, model.config.steps);
        }
        rec.steps.push_back(std::move(step));
    }
    rec.final_latent = std::move(g);
    return rec;
}

}  // namespace topi
