// Copyright (C) 2026 the topi authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace topi {

// Dense row-major matrix of doubles. Small and deliberately dumb: the whole
// pipeline runs at toy scale on one core, so clarity wins over cleverness.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

// a(m,k) * b(k,n); throws std::invalid_argument on shape mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// a(m,k) * b(n,k)^T -> (m,n); avoids materializing transposes in attention.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Row-wise softmax of m * scale, numerically stabilized per row.
Matrix row_softmax(const Matrix& m, double scale);

// Euclidean norm of every row.
std::vector<double> row_l2_norms(const Matrix& m);

struct FillDist {
    enum class Kind { uniform, gaussian };
    Kind kind = Kind::gaussian;
    // uniform: values in [-s, s]; gaussian: standard deviation
    double param = 1.0;

    static FillDist uniform(double s) { return {Kind::uniform, s}; }
    static FillDist gaussian(double sigma) { return {Kind::gaussian, sigma}; }
};

// Fills row-major from a fresh generator seeded with `seed`; same seed and
// shape always produce the same matrix.
Matrix seeded_fill(std::size_t rows, std::size_t cols, std::uint64_t seed, const FillDist& dist);

// Row/column stacking and slicing helpers. Empty operands are allowed as long
// as the shared dimension agrees among the non-empty ones.
Matrix vstack(const Matrix& a, const Matrix& b);
Matrix hstack(const Matrix& a, const Matrix& b);
Matrix take_rows(const Matrix& m, std::size_t r0, std::size_t r1);
Matrix take_cols(const Matrix& m, std::size_t c0, std::size_t c1);
void put_cols(Matrix& dst, std::size_t c0, const Matrix& src);

}  // namespace topi
