// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/model.hpp"

#include <cmath>
#include <string>

#include "topi/errors.hpp"
#include "topi/rng.hpp"

namespace topi {

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) {
            throw config_error(std::string(name) + " must be >= 1");
        }
    };
    positive(depth_double, "depth_double");
    positive(heads, "heads");
    positive(head_dim, "head_dim");
    positive(n_noisy, "n_noisy");
    positive(n_ref, "n_ref");
    positive(n_prompt, "n_prompt");
    positive(steps, "steps");
    if (ffn_mult != 4 && ffn_mult != 6) {
        throw config_error("ffn_mult must be 4 or 6");
    }
    if (head_dim % 4 != 0) {
        throw config_error("head_dim must be divisible by 4 (two axial rotary halves of 2-D pairs)");
    }
}

std::size_t grid_width(std::size_t n) {
    std::size_t w = 1;
    while (w * w < n) {
        ++w;
    }
    return w;
}

std::vector<GridPos> make_grid_positions(std::size_t n, std::size_t width, int col_offset) {
    std::vector<GridPos> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].row = static_cast<int>(i / width);
        out[i].col = static_cast<int>(i % width) + col_offset;
    }
    return out;
}

std::pair<Matrix, JointLayout> concat_sequence(const Matrix& noisy, const Matrix& ref,
                                               const Matrix& prompt) {
    JointLayout layout;
    layout.n_noisy = noisy.rows;
    layout.n_ref = ref.rows;
    layout.n_prompt = prompt.rows;
    return {vstack(vstack(noisy, ref), prompt), layout};
}

Matrix apply_rope(const Matrix& q_or_k, const std::vector<GridPos>& positions, std::size_t heads) {
    if (heads == 0 || q_or_k.cols % heads != 0) {
        throw config_error("apply_rope: column count must be a positive multiple of heads");
    }
    const std::size_t head_dim = q_or_k.cols / heads;
    if (head_dim % 4 != 0) {
        throw config_error("apply_rope: head_dim must be divisible by 4");
    }
    if (positions.size() != q_or_k.rows) {
        throw config_error("apply_rope: one position per row required");
    }

    const std::size_t half = head_dim / 2;
    const std::size_t pairs = half / 2;
    std::vector<double> freq(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        freq[k] = std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(half));
    }

    Matrix out = q_or_k;
    for (std::size_t r = 0; r < out.rows; ++r) {
        double* row = out.row(r);
        const double axis[2] = {static_cast<double>(positions[r].row),
                                static_cast<double>(positions[r].col)};
        for (std::size_t h = 0; h < heads; ++h) {
            for (int a = 0; a < 2; ++a) {
                double* part = row + h * head_dim + static_cast<std::size_t>(a) * half;
                for (std::size_t k = 0; k < pairs; ++k) {
                    const double angle = axis[a] * freq[k];
                    const double c = std::cos(angle);
                    const double s = std::sin(angle);
                    const double x = part[2 * k];
                    const double y = part[2 * k + 1];
                    part[2 * k] = x * c - y * s;
                    part[2 * k + 1] = x * s + y * c;
                }
            }
        }
    }
    return out;
}

Matrix rms_norm(const Matrix& m) {
    constexpr double eps = 1e-6;
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            acc += src[j] * src[j];
        }
        const double inv = 1.0 / std::sqrt(acc / static_cast<double>(m.cols) + eps);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            dst[j] = src[j] * inv;
        }
    }
    return out;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}

Matrix gelu(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        out.data[i] = gelu(m.data[i]);
    }
    return out;
}

namespace {

Matrix init_weight(SplitMix64& seeds, std::size_t fan_in, std::size_t fan_out) {
    const double sigma = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return seeded_fill(fan_in, fan_out, seeds.next(), FillDist::gaussian(sigma));
}

}  // namespace

ToyDiT build_model(const ModelConfig& config) {
    config.validate();
    ToyDiT model;
    model.config = config;

    const std::size_t d = config.d_model();
    const std::size_t f = config.ffn_mult * d;

    // The creation order below is part of the determinism contract; do not
    // reorder without re-recording fixtures.
    SplitMix64 seeds(config.seed);
    model.double_layers.resize(config.depth_double);
    for (auto& layer : model.double_layers) {
        layer.img_wq = init_weight(seeds, d, d);
        layer.img_wk = init_weight(seeds, d, d);
        layer.img_wv = init_weight(seeds, d, d);
        layer.img_wo = init_weight(seeds, d, d);
        layer.img_w1 = init_weight(seeds, d, f);
        layer.img_w2 = init_weight(seeds, f, d);
        layer.txt_wq = init_weight(seeds, d, d);
        layer.txt_wk = init_weight(seeds, d, d);
        layer.txt_wv = init_weight(seeds, d, d);
        layer.txt_wo = init_weight(seeds, d, d);
        layer.txt_w1 = init_weight(seeds, d, f);
        layer.txt_w2 = init_weight(seeds, f, d);
    }
    model.single_layers.resize(config.depth_single);
    for (auto& layer : model.single_layers) {
        layer.wq = init_weight(seeds, d, d);
        layer.wk = init_weight(seeds, d, d);
        layer.wv = init_weight(seeds, d, d);
        layer.w_up = init_weight(seeds, d, f);
        layer.w_fused = init_weight(seeds, d + f, d);
    }
    model.prompt_embed = seeded_fill(config.n_prompt, d, seeds.next(), FillDist::gaussian(1.0));
    model.w_out = init_weight(seeds, d, d);
    return model;
}

}  // namespace topi
