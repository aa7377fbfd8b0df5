// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#include "topi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "topi/rng.hpp"

namespace topi {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                    " vs " + std::to_string(b.rows) + ")");
    }
    Matrix out(a.rows, b.cols);
    // ikj order keeps the inner loop contiguous over both b and out.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw std::invalid_argument("matmul_nt: inner dimensions differ (" +
                                    std::to_string(a.cols) + " vs " + std::to_string(b.cols) +
                                    ")");
    }
    Matrix out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            orow[j] = acc;
        }
    }
    return out;
}

Matrix row_softmax(const Matrix& m, double scale) {
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row(i);
        double* dst = out.row(i);
        double mx = -INFINITY;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double v = src[j] * scale;
            if (v > mx) mx = v;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double e = std::exp(src[j] * scale - mx);
            dst[j] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < m.cols; ++j) {
            dst[j] *= inv;
        }
    }
    return out;
}

std::vector<double> row_l2_norms(const Matrix& m) {
    std::vector<double> norms(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            acc += src[j] * src[j];
        }
        norms[i] = std::sqrt(acc);
    }
    return norms;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.rows == 0) return b;
    if (b.rows == 0) return a;
    if (a.cols != b.cols) {
        throw std::invalid_argument("vstack: column counts differ");
    }
    Matrix out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
    if (a.cols == 0) return b;
    if (b.cols == 0) return a;
    if (a.rows != b.rows) {
        throw std::invalid_argument("hstack: row counts differ");
    }
    Matrix out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::copy(a.row(i), a.row(i) + a.cols, out.row(i));
        std::copy(b.row(i), b.row(i) + b.cols, out.row(i) + a.cols);
    }
    return out;
}

Matrix take_rows(const Matrix& m, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > m.rows) {
        throw std::invalid_argument("take_rows: bad range");
    }
    Matrix out(r1 - r0, m.cols);
    std::copy(m.row(r0), m.row(r0) + (r1 - r0) * m.cols, out.data.begin());
    return out;
}

Matrix take_cols(const Matrix& m, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > m.cols) {
        throw std::invalid_argument("take_cols: bad range");
    }
    Matrix out(m.rows, c1 - c0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        std::copy(m.row(i) + c0, m.row(i) + c1, out.row(i));
    }
    return out;
}

void put_cols(Matrix& dst, std::size_t c0, const Matrix& src) {
    if (src.rows != dst.rows || c0 + src.cols > dst.cols) {
        throw std::invalid_argument("put_cols: shape mismatch");
    }
    for (std::size_t i = 0; i < src.rows; ++i) {
        std::copy(src.row(i), src.row(i) + src.cols, dst.row(i) + c0);
    }
}

Matrix seeded_fill(std::size_t rows, std::size_t cols, std::uint64_t seed, const FillDist& dist) {
    Matrix out(rows, cols);
    Xoshiro256pp rng(seed);
    if (dist.kind == FillDist::Kind::uniform) {
        for (double& v : out.data) {
            v = rng.next_uniform(-dist.param, dist.param);
        }
    } else {
        for (double& v : out.data) {
            v = rng.next_gaussian(dist.param);
        }
    }
    return out;
}

}  // namespace topi
