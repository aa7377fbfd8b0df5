// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "topi/tensor.hpp"

namespace topi {

// Toy diffusion-transformer configuration. d_model = heads * head_dim.
// ffn_mult selects the per-stream FFN hidden width (4d or 6d).
struct ModelConfig {
    std::size_t depth_double = 6;
    std::size_t depth_single = 6;
    std::size_t heads = 8;
    std::size_t head_dim = 8;
    std::size_t ffn_mult = 4;
    std::size_t n_noisy = 64;
    std::size_t n_ref = 64;
    std::size_t n_prompt = 8;
    std::size_t steps = 40;
    std::uint64_t seed = 42;

    std::size_t d_model() const { return heads * head_dim; }
    std::size_t total_layers() const { return depth_double + depth_single; }

    // Throws config_error on any violated constraint.
    void validate() const;
};

// Integer 2-D grid coordinate carried alongside every image-stream token.
// Pruning gathers these together with the hidden states, so the rotary
// geometry of surviving tokens never changes.
struct GridPos {
    int row = 0;
    int col = 0;

    friend bool operator==(const GridPos& a, const GridPos& b) {
        return a.row == b.row && a.col == b.col;
    }
};

// Width of the square-ish token grid used to assign coordinates: the
// smallest w with w*w >= n.
std::size_t grid_width(std::size_t n);

// Positions 0..n-1 laid out row-major on a grid of the given width, with an
// optional column offset (the reference canvas sits to the right of the
// generation canvas).
std::vector<GridPos> make_grid_positions(std::size_t n, std::size_t width, int col_offset);

// Block offsets of the joint sequence [noisy ; ref ; prompt].
struct JointLayout {
    std::size_t n_noisy = 0;
    std::size_t n_ref = 0;
    std::size_t n_prompt = 0;

    std::size_t total() const { return n_noisy + n_ref + n_prompt; }
    std::size_t ref_begin() const { return n_noisy; }
    std::size_t prompt_begin() const { return n_noisy + n_ref; }
};

// Stacks the three blocks in their fixed order and reports the layout.
// The reference block may be empty (fully pruned context).
std::pair<Matrix, JointLayout> concat_sequence(const Matrix& noisy, const Matrix& ref,
                                               const Matrix& prompt);

// Axial 2-D rotary embedding, base 10000. The first half of every head's
// dimensions rotates by the row coordinate, the second half by the column
// coordinate; within a half, consecutive pairs share one frequency.
// Requires head_dim divisible by 4 (config_error otherwise).
Matrix apply_rope(const Matrix& q_or_k, const std::vector<GridPos>& positions, std::size_t heads);

// Pre-norm RMS normalization, eps 1e-6, no learned parameters.
Matrix rms_norm(const Matrix& m);

// Exact-erf GELU, applied elementwise.
double gelu(double x);
Matrix gelu(const Matrix& m);

struct DoubleLayerWeights {
    Matrix img_wq, img_wk, img_wv, img_wo;
    Matrix img_w1, img_w2;
    Matrix txt_wq, txt_wk, txt_wv, txt_wo;
    Matrix txt_w1, txt_w2;
};

struct SingleLayerWeights {
    Matrix wq, wk, wv;
    Matrix w_up;
    // consumes [attn_out ; mlp_hidden], hence (d + ffn_mult*d) x d
    Matrix w_fused;
};

struct ToyDiT {
    ModelConfig config;
    std::vector<DoubleLayerWeights> double_layers;
    std::vector<SingleLayerWeights> single_layers;
    Matrix prompt_embed;
    Matrix w_out;
};

// Deterministic weight construction: a splitmix64 stream over config.seed
// hands one sub-seed to every matrix in a fixed documented order, so equal
// configs always produce bitwise-equal models.
ToyDiT build_model(const ModelConfig& config);

// Noisy-query -> reference-key attention slice plus reference value norms,
// recorded at one layer of one forward pass. n_ref is the ACTIVE reference
// count at that layer (full at anchor steps, pruned size past the exempt
// boundary otherwise).
struct AttentionCapture {
    int layer = -1;
    std::size_t n_noisy = 0;
    std::size_t n_ref = 0;
    std::size_t heads = 0;
    std::vector<double> attn;         // [head][i in G][j in ref], flattened
    std::vector<double> value_norms;  // [head][j in ref]
    Matrix ref_hidden;                // layer-input reference rows

    double a(std::size_t h, std::size_t i, std::size_t j) const {
        return attn[(h * n_noisy + i) * n_ref + j];
    }
    double& a(std::size_t h, std::size_t i, std::size_t j) {
        return attn[(h * n_noisy + i) * n_ref + j];
    }
    double vnorm(std::size_t h, std::size_t j) const { return value_norms[h * n_ref + j]; }
};

}  // namespace topi
