// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "topi/model.hpp"

namespace topi {

namespace {

constexpr double kPsnrCap = 99.0;

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
}

double observed_range(const Matrix& m) {
    if (m.data.empty()) {
        return 1.0;
    }
    const auto [lo, hi] = std::minmax_element(m.data.begin(), m.data.end());
    const double range = *hi - *lo;
    return range > 0.0 ? range : 1.0;
}

}  // namespace

double psnr(const Matrix& reference, const Matrix& candidate, double peak) {
    require_same_shape(reference, candidate, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double d = reference.data[i] - candidate.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(reference.data.size());
    if (mse == 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Matrix& reference, const Matrix& candidate) {
    require_same_shape(reference, candidate, "ssim");
    constexpr std::size_t win = 8;
    if (reference.rows < win || reference.cols < win) {
        throw std::invalid_argument("ssim: inputs must be at least 8x8");
    }
    const double peak = observed_range(reference);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    constexpr double inv_n = 1.0 / static_cast<double>(win * win);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r0 = 0; r0 + win <= reference.rows; ++r0) {
        for (std::size_t c0 = 0; c0 + win <= reference.cols; ++c0) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (std::size_t r = r0; r < r0 + win; ++r) {
                for (std::size_t c = c0; c < c0 + win; ++c) {
                    const double x = reference.at(r, c);
                    const double y = candidate.at(r, c);
                    sx += x;
                    sy += y;
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
            }
            const double mx = sx * inv_n;
            const double my = sy * inv_n;
            const double vx = sxx * inv_n - mx * mx;
            const double vy = syy * inv_n - my * my;
            const double cov = sxy * inv_n - mx * my;
            const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

Matrix latent_to_image(const Matrix& latent) {
    const std::size_t n = latent.rows;
    const std::size_t w = grid_width(n);
    const std::size_t h = (n + w - 1) / w;
    Matrix image(h, w);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        const double* row = latent.row(i);
        for (std::size_t c = 0; c < latent.cols; ++c) {
            mean += row[c];
        }
        image.at(i / w, i % w) = mean / static_cast<double>(latent.cols);
    }
    return image;
}

QualityReport compare_latents(const Matrix& reference_latent, const Matrix& candidate_latent) {
    require_same_shape(reference_latent, candidate_latent, "compare_latents");
    QualityReport report;

    double sum_abs = 0.0;
    for (std::size_t i = 0; i < reference_latent.data.size(); ++i) {
        const double d = std::abs(reference_latent.data[i] - candidate_latent.data[i]);
        report.max_abs_err = std::max(report.max_abs_err, d);
        sum_abs += d;
    }
    report.mean_abs_err = sum_abs / static_cast<double>(reference_latent.data.size());

    const Matrix ref_img = latent_to_image(reference_latent);
    const Matrix cand_img = latent_to_image(candidate_latent);
    report.psnr = psnr(ref_img, cand_img, observed_range(ref_img));
    report.ssim = ssim(ref_img, cand_img);
    return report;
}

}  // namespace topi
