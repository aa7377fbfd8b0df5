// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "topi/tensor.hpp"

namespace topi {

struct QualityReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double max_abs_err = 0.0;
    double mean_abs_err = 0.0;
};

// 10*log10(peak^2 / MSE); identical inputs (MSE = 0) cap at 99.0 dB, and the
// cap also bounds near-identical pairs.
double psnr(const Matrix& reference, const Matrix& candidate, double peak);

// Uniform 8x8 sliding window (stride 1), C1 = (0.01*peak)^2,
// C2 = (0.03*peak)^2 with peak taken from the reference's observed value
// range (fallback 1.0 for constant references); mean over windows.
double ssim(const Matrix& reference, const Matrix& candidate);

// Latent-space proxy comparison: each latent is reshaped to its token grid,
// channel-averaged to a single-channel image, and compared with peak set to
// the reference image's observed range.
QualityReport compare_latents(const Matrix& reference_latent, const Matrix& candidate_latent);

// The channel-averaged token-grid image used by compare_latents.
Matrix latent_to_image(const Matrix& latent);

}  // namespace topi
