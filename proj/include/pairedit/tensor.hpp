// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pairedit {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
///
/// A default-constructed tensor is empty (rank 0, no data) and only serves as
/// a placeholder; every other tensor has a nonempty shape with dims >= 1.
/// Reductions in this module run in plain left-to-right index order so that
/// results are bit-reproducible.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double value);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t dim(std::size_t axis) const;

    // 2-D views; a rank-1 tensor is treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    std::span<const double> row(std::size_t r) const;
    std::span<double> row(std::size_t r);

    Tensor reshaped(Shape shape) const;
    Tensor row_copy(std::size_t r) const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Throws std::runtime_error naming `what` if any element is NaN or infinite.
void ensure_finite(const Tensor& t, const char* what);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// a + s * b
Tensor axpy(const Tensor& a, double s, const Tensor& b);
/// In-place a += s * b.
void axpy_inplace(Tensor& a, double s, const Tensor& b);

/// [m x k] * [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m x k] * [n x k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// [k x m]^T * [k x n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
double mean(const Tensor& a);
double squared_norm(const Tensor& a);
double norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Column-wise concatenation of two matrices with equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Columns [begin, end) of a matrix.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
/// Stack equal-length rows into an [n x d] matrix.
Tensor stack_rows(std::span<const Tensor> rows);
/// Per-column mean of an [n x d] matrix, returned as shape [d].
Tensor column_mean(const Tensor& a);
/// Per-column population variance of an [n x d] matrix, returned as shape [d].
Tensor column_variance(const Tensor& a);

}  // namespace pairedit
